#include "hgl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hgl/checkpoint.hpp"
#include "hgl/rng.hpp"
#include "hgl/schedule.hpp"
#include "hgl/tape.hpp"

namespace hgl {
namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

template <typename Parse>
auto parse_setting(const ConfigMap& cfg, const std::string& key, const std::string& fallback, Parse parse) {
  const std::string text = cfg.get_string(key, fallback);
  try {
    return parse(text);
  } catch (const std::exception& e) {
    throw ConfigError("setting '" + key + "': " + e.what());
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::size_t> training_indices(const Dataset& ds, TrainTask task) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    const Task t = ds.instances[i].task;
    if (task == TrainTask::kBoth || (task == TrainTask::kAnswer) == (t == Task::kAnswer)) idx.push_back(i);
  }
  return idx;
}

void require_compatible(const Dataset& ds, const ModelConfig& mc, const char* which) {
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    const Instance& inst = ds.instances[i];
    if (inst.scene.cols() != mc.channels) {
      throw DatasetError(std::string(which) + " instance " + std::to_string(i) + " has " +
                         std::to_string(inst.scene.cols()) + " channels, model expects " + std::to_string(mc.channels));
    }
    validate_instance(inst, mc.vocab_size);
  }
}

}  // namespace

std::string_view to_string(TrainTask t) {
  switch (t) {
    case TrainTask::kBoth: return "both";
    case TrainTask::kAnswer: return "answer";
    case TrainTask::kRationale: return "rationale";
  }
  return "?";
}

TrainTask parse_train_task(std::string_view text) {
  if (text == "both") return TrainTask::kBoth;
  if (text == "answer") return TrainTask::kAnswer;
  if (text == "rationale") return TrainTask::kRationale;
  throw ConfigError("unknown task '" + std::string(text) + "' (expected both|answer|rationale)");
}

TrainConfig TrainConfig::from_config(const ConfigMap& cfg) {
  cfg.reject_unknown({"learning_rate", "adam_beta1", "adam_beta2", "adam_epsilon", "weight_decay", "plateau_patience",
                      "lr_factor", "max_epochs", "batch_size", "seed", "task", "dim", "hidden", "embedding_scale",
                      "activation", "adjacency_mode", "cvm_residual", "use_vahg", "use_qahg", "use_cvm", "train_path",
                      "val_path", "weight_decay_mode"});
  TrainConfig c;
  c.learning_rate = cfg.get_double("learning_rate", c.learning_rate);
  c.adam_beta1 = cfg.get_double("adam_beta1", c.adam_beta1);
  c.adam_beta2 = cfg.get_double("adam_beta2", c.adam_beta2);
  c.adam_epsilon = cfg.get_double("adam_epsilon", c.adam_epsilon);
  c.weight_decay = cfg.get_double("weight_decay", c.weight_decay);
  if (cfg.get_string("weight_decay_mode", "decoupled") != "decoupled") {
    throw ConfigError("weight_decay_mode: only 'decoupled' is supported");
  }
  c.plateau_patience = cfg.get_size("plateau_patience", c.plateau_patience);
  c.lr_factor = cfg.get_double("lr_factor", c.lr_factor);
  c.max_epochs = cfg.get_size("max_epochs", c.max_epochs);
  c.batch_size = cfg.get_size("batch_size", c.batch_size);
  c.seed = cfg.get_u64("seed", c.seed);
  c.task = parse_setting(cfg, "task", "both", [](const std::string& s) { return parse_train_task(s); });
  c.dim = cfg.get_size("dim", c.dim);
  c.hidden = cfg.get_size("hidden", c.hidden);
  c.embedding_scale = cfg.get_double("embedding_scale", c.embedding_scale);
  c.activation = parse_setting(cfg, "activation", "relu", [](const std::string& s) { return parse_activation(s); });
  c.adjacency_mode =
      parse_setting(cfg, "adjacency_mode", "global", [](const std::string& s) { return parse_softmax_mode(s); });
  c.cvm_residual =
      parse_setting(cfg, "cvm_residual", "context", [](const std::string& s) { return parse_cvm_residual_mode(s); });
  c.use_vahg = cfg.get_bool("use_vahg", c.use_vahg);
  c.use_qahg = cfg.get_bool("use_qahg", c.use_qahg);
  c.use_cvm = cfg.get_bool("use_cvm", c.use_cvm);
  c.train_path = cfg.get_string("train_path", c.train_path);
  c.val_path = cfg.get_string("val_path", c.val_path);
  c.validate();
  return c;
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  return {
      {"learning_rate", num(learning_rate)},
      {"adam_beta1", num(adam_beta1)},
      {"adam_beta2", num(adam_beta2)},
      {"adam_epsilon", num(adam_epsilon)},
      {"weight_decay", num(weight_decay)},
      {"weight_decay_mode", "decoupled"},
      {"plateau_patience", std::to_string(plateau_patience)},
      {"lr_factor", num(lr_factor)},
      {"max_epochs", std::to_string(max_epochs)},
      {"batch_size", std::to_string(batch_size)},
      {"seed", std::to_string(seed)},
      {"task", std::string(to_string(task))},
      {"dim", std::to_string(dim)},
      {"hidden", std::to_string(hidden ? hidden : dim)},
      {"embedding_scale", num(embedding_scale)},
      {"activation", std::string(to_string(activation))},
      {"adjacency_mode", std::string(to_string(adjacency_mode))},
      {"cvm_residual", std::string(to_string(cvm_residual))},
      {"use_vahg", use_vahg ? "true" : "false"},
      {"use_qahg", use_qahg ? "true" : "false"},
      {"use_cvm", use_cvm ? "true" : "false"},
      {"train_path", train_path},
      {"val_path", val_path},
  };
}

void TrainConfig::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam_beta1 must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2 must lie in [0, 1)");
  if (!positive(adam_epsilon)) throw ConfigError("adam_epsilon must be positive");
  if (!(weight_decay >= 0.0 && std::isfinite(weight_decay))) throw ConfigError("weight_decay must be non-negative");
  if (plateau_patience == 0) throw ConfigError("plateau_patience must be at least 1");
  if (!(lr_factor > 0.0 && lr_factor < 1.0)) throw ConfigError("lr_factor must lie in (0, 1)");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (dim == 0) throw ConfigError("dim must be positive");
  if (!positive(embedding_scale)) throw ConfigError("embedding_scale must be positive");
}

AdamConfig TrainConfig::adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_epsilon, weight_decay}; }

ModelConfig TrainConfig::model(std::size_t vocab_size, std::size_t channels) const {
  ModelConfig m;
  m.vocab_size = vocab_size;
  m.channels = channels;
  m.dim = dim;
  m.hidden = hidden;
  m.activation = activation;
  m.adjacency_mode = adjacency_mode;
  m.cvm_residual = cvm_residual;
  m.embedding_scale = embedding_scale;
  m.use_vahg = use_vahg;
  m.use_qahg = use_qahg;
  m.use_cvm = use_cvm;
  return m;
}

Evaluation score_choices(const Dataset& dataset, const std::vector<std::size_t>& chosen, const std::vector<double>& w_o) {
  const auto& xs = dataset.instances;
  if (chosen.size() != xs.size()) throw std::invalid_argument("one choice per instance required");
  if (!w_o.empty() && w_o.size() != xs.size()) throw std::invalid_argument("one modality weight per instance required");

  Evaluation ev;
  std::size_t answer_right = 0, rationale_right = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    InstanceResult r{i, xs[i].task, xs[i].gold, chosen[i], w_o.empty() ? 0.0 : w_o[i]};
    const bool right = r.chosen == r.gold;
    if (r.task == Task::kAnswer) {
      ++ev.metrics.answer_count;
      answer_right += right;
    } else {
      ++ev.metrics.rationale_count;
      rationale_right += right;
    }
    ev.instances.push_back(r);
  }
  std::size_t both_right = 0;
  const auto pairs = pair_scenes(dataset);
  for (const auto& p : pairs) both_right += chosen[p.answer] == xs[p.answer].gold && chosen[p.rationale] == xs[p.rationale].gold;

  auto ratio = [](std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };
  EvalMetrics& m = ev.metrics;
  m.pair_count = pairs.size();
  m.answer_accuracy = ratio(answer_right, m.answer_count);
  m.rationale_accuracy = ratio(rationale_right, m.rationale_count);
  m.combined_accuracy = ratio(both_right, std::max(m.answer_count, m.rationale_count));
  if (!ev.instances.empty()) {
    double sum = 0.0;
    m.min_w_o = m.max_w_o = ev.instances.front().w_o;
    for (const auto& r : ev.instances) {
      sum += r.w_o;
      m.min_w_o = std::min(m.min_w_o, r.w_o);
      m.max_w_o = std::max(m.max_w_o, r.w_o);
    }
    m.mean_w_o = sum / static_cast<double>(ev.instances.size());
  }
  return ev;
}

Evaluation evaluate(const Model& model, const Dataset& dataset) {
  std::vector<std::size_t> chosen;
  std::vector<double> w_o;
  chosen.reserve(dataset.instances.size());
  w_o.reserve(dataset.instances.size());
  for (const auto& inst : dataset.instances) {
    Tape tape;
    const ForwardPass pass = model.forward(tape, inst);
    chosen.push_back(make_prediction(pass.logits.value()).chosen);
    double w = 0.0;
    for (const auto& c : pass.candidates)
      if (c.modality) w += c.modality->value()[0];
    w_o.push_back(w / static_cast<double>(kNumCandidates));
  }
  return score_choices(dataset, chosen, w_o);
}

Model load_model(const std::filesystem::path& checkpoint) {
  Checkpoint ck = load_checkpoint(checkpoint);
  Model model(ModelConfig::from_meta(ck.meta), 0);
  assign_parameters(model.params(), ck.params);
  return model;
}

Evaluation evaluate(const std::filesystem::path& checkpoint, const Dataset& dataset) {
  const Model model = load_model(checkpoint);
  require_compatible(dataset, model.config(), "evaluation");
  return evaluate(model, dataset);
}

double selection_accuracy(const EvalMetrics& m, TrainTask task) {
  switch (task) {
    case TrainTask::kAnswer: return m.answer_accuracy;
    case TrainTask::kRationale: return m.rationale_accuracy;
    case TrainTask::kBoth: return 0.5 * (m.answer_accuracy + m.rationale_accuracy);
  }
  return 0.0;
}

TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& val_set, std::ostream* progress) {
  config.validate();
  if (train_set.instances.empty()) throw DatasetError("training set is empty");
  const auto start = std::chrono::steady_clock::now();

  std::size_t vocab = 0;
  for (const auto* ds : {&train_set, &val_set}) {
    for (const auto& inst : ds->instances) {
      for (auto t : inst.question) vocab = std::max(vocab, t + 1);
      for (const auto& c : inst.candidates)
        for (auto t : c) vocab = std::max(vocab, t + 1);
    }
  }
  // Prefer the vocabulary declared by the generator when it is recorded.
  if (auto it = train_set.metadata.find("gen.vocab_size"); it != train_set.metadata.end()) {
    vocab = std::max<std::size_t>(vocab, std::stoul(it->second));
  }
  const ModelConfig model_config = config.model(vocab, train_set.instances.front().scene.cols());
  require_compatible(train_set, model_config, "training");
  require_compatible(val_set, model_config, "validation");

  Model model(model_config, config.seed);
  Adam adam(config.adam());
  PlateauSchedule schedule(config.learning_rate, config.plateau_patience, config.lr_factor);
  Rng order_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order = training_indices(train_set, config.task);
  if (order.empty()) throw DatasetError("training set has no problems for task '" + std::string(to_string(config.task)) + "'");

  TrainResult result;
  result.model_config = model_config;
  result.best_params = model.params();
  result.report.config = config.to_map();
  double best_score = -1.0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = adam.learning_rate();
    order_rng.shuffle(std::span(order));
    double loss_sum = 0.0;
    ParameterStore& params = model.params();
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t end = std::min(order.size(), b + config.batch_size);
      params.zero_grad();
      for (std::size_t i = b; i < end; ++i) {
        const Instance& inst = train_set.instances[order[i]];
        Tape tape;
        const ForwardPass pass = model.forward(tape, inst);
        Var l = loss(pass.logits, inst.gold);
        loss_sum += l.value().item();
        tape.backward(l);
        tape.accumulate_gradients(params);
      }
      const double inv = 1.0 / static_cast<double>(end - b);
      for (auto& [name, entry] : params)
        for (auto& g : entry.grad.data()) g *= inv;
      adam.step(params);
    }
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val = evaluate(model, val_set).metrics;
    const double score = selection_accuracy(rec.val, config.task);
    if (score > best_score) {
      best_score = score;
      result.best_params = model.params();
      result.report.best_epoch = epoch;
      result.report.best = rec.val;
    }
    adam.set_learning_rate(schedule.observe(score));
    result.report.epochs.push_back(rec);
    if (progress) {
      *progress << "epoch " << epoch << "  lr " << num(rec.learning_rate) << "  loss " << fixed(rec.train_loss, 4)
                << "  val answer " << fixed(rec.val.answer_accuracy, 4) << "  rationale "
                << fixed(rec.val.rationale_accuracy, 4) << "  combined " << fixed(rec.val.combined_accuracy, 4)
                << std::endl;
    }
  }
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void write_metrics_csv(std::ostream& os, const MetricsReport& report) {
  os << "epoch,learning_rate,train_loss,val_answer_acc,val_rationale_acc,val_combined_acc,mean_w_o,min_w_o,max_w_o\n";
  for (const auto& e : report.epochs) {
    os << e.epoch << ',' << num(e.learning_rate) << ',' << num(e.train_loss) << ',' << num(e.val.answer_accuracy) << ','
       << num(e.val.rationale_accuracy) << ',' << num(e.val.combined_accuracy) << ',' << num(e.val.mean_w_o) << ','
       << num(e.val.min_w_o) << ',' << num(e.val.max_w_o) << '\n';
  }
}

void write_metrics_table(std::ostream& os, const MetricsReport& report) {
  os << "# configuration\n" << format_config(report.config) << '\n';
  char line[160];
  std::snprintf(line, sizeof line, "%5s  %12s  %10s  %8s  %9s  %8s  %8s\n", "epoch", "lr", "loss", "Q->A", "QA->R",
                "Q->AR", "mean w_o");
  os << line;
  for (const auto& e : report.epochs) {
    std::snprintf(line, sizeof line, "%5zu  %12.6g  %10.6f  %8.2f  %9.2f  %8.2f  %8.4f\n", e.epoch, e.learning_rate,
                  e.train_loss, 100 * e.val.answer_accuracy, 100 * e.val.rationale_accuracy,
                  100 * e.val.combined_accuracy, e.val.mean_w_o);
    os << line;
  }
  if (report.best_epoch) {
    std::snprintf(line, sizeof line, "best epoch %zu: Q->A %.2f  QA->R %.2f  Q->AR %.2f\n", *report.best_epoch,
                  100 * report.best.answer_accuracy, 100 * report.best.rationale_accuracy,
                  100 * report.best.combined_accuracy);
    os << '\n' << line;
  } else {
    os << "\nno epochs run; checkpoint holds the initial weights\n";
  }
}

void write_evaluation_table(std::ostream& os, const Evaluation& eval) {
  const EvalMetrics& m = eval.metrics;
  char line[200];
  std::snprintf(line, sizeof line,
                "%-8s %8s %8s\n%-8s %8.2f %8zu\n%-8s %8.2f %8zu\n%-8s %8.2f %8zu\n\nw_o mean %.4f  min %.4f  max %.4f\n",
                "task", "acc(%)", "count", "Q->A", 100 * m.answer_accuracy, m.answer_count, "QA->R",
                100 * m.rationale_accuracy, m.rationale_count, "Q->AR", 100 * m.combined_accuracy, m.pair_count,
                m.mean_w_o, m.min_w_o, m.max_w_o);
  os << line;
}

void write_evaluation_csv(std::ostream& os, const Evaluation& eval) {
  os << "index,task,gold,chosen,correct,w_o\n";
  for (const auto& r : eval.instances) {
    os << r.index << ',' << to_string(r.task) << ',' << r.gold << ',' << r.chosen << ',' << (r.gold == r.chosen ? 1 : 0)
       << ',' << num(r.w_o) << '\n';
  }
}

void write_training_outputs(const TrainResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto meta = result.model_config.to_meta();
  for (const auto& [k, v] : result.report.config) meta["train." + k] = v;
  meta["train.best_epoch"] = result.report.best_epoch ? std::to_string(*result.report.best_epoch) : "none";
  save_checkpoint(dir / "checkpoint.bin", result.best_params, meta);

  std::ostringstream csv, table;
  write_metrics_csv(csv, result.report);
  write_metrics_table(table, result.report);
  write_file(dir / "metrics.csv", csv.str());
  write_file(dir / "report.txt", table.str());
  write_file(dir / "timing.txt", "wall_seconds " + fixed(result.report.wall_seconds, 3) + "\n");
}

}  // namespace hgl
