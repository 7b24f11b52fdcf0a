// Command-line front end: dataset generation, training, evaluation, graph
// dumps and the ablation grid.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hgl/ablation.hpp"
#include "hgl/checkpoint.hpp"
#include "hgl/generator.hpp"
#include "hgl/graph_dump.hpp"
#include "hgl/trainer.hpp"

namespace fs = std::filesystem;
using namespace hgl;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::vector<std::string> overrides;  // key=value
};

struct ModuleFlags {
  bool no_vahg = false;
  bool no_qahg = false;
  bool no_cvm = false;
  std::string adjacency_mode;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

ConfigMap load_config(const CommonOptions& opt) {
  ConfigMap cfg = opt.config.empty() ? ConfigMap{} : ConfigMap::load(opt.config);
  for (const auto& kv : opt.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opt.seed) cfg.set("seed", std::to_string(*opt.seed));
  return cfg;
}

/// Dataset paths in a config file are relative to the file itself.
std::string resolve(const CommonOptions& opt, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute() || opt.config.empty()) return path;
  return (fs::path(opt.config).parent_path() / path).lexically_normal().string();
}

TrainConfig load_train_config(const CommonOptions& opt, const ModuleFlags& flags) {
  TrainConfig cfg = TrainConfig::from_config(load_config(opt));
  cfg.train_path = resolve(opt, cfg.train_path);
  cfg.val_path = resolve(opt, cfg.val_path);
  if (flags.no_vahg) cfg.use_vahg = false;
  if (flags.no_qahg) cfg.use_qahg = false;
  if (flags.no_cvm) cfg.use_cvm = false;
  if (!flags.adjacency_mode.empty()) cfg.adjacency_mode = parse_softmax_mode(flags.adjacency_mode);
  return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config, "key = value settings file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", opt.seed, "override the seed from the config");
  cmd->add_option("--out", opt.out, "output directory")->capture_default_str();
  cmd->add_option("--set", opt.overrides, "override one setting (key=value); repeatable");
}

void add_module_flags(CLI::App* cmd, ModuleFlags& flags) {
  cmd->add_flag("--no-vahg", flags.no_vahg, "disable the vision-to-answer graph");
  cmd->add_flag("--no-qahg", flags.no_qahg, "disable the question-to-answer graph");
  cmd->add_flag("--no-cvm", flags.no_cvm, "disable the contextual voting module");
  cmd->add_option("--adjacency-mode", flags.adjacency_mode, "adjacency softmax normalisation")
      ->check(CLI::IsMember({"global", "row"}));
}

int run_gen(const CommonOptions& opt) {
  const GeneratorConfig cfg = GeneratorConfig::from_config(load_config(opt));
  const Dataset all = generate(cfg);
  auto [train_set, val_set] = split_dataset(all, cfg.split);
  train_set.metadata["split"] = "train";
  val_set.metadata["split"] = "val";
  fs::create_directories(opt.out);
  save_dataset(train_set, fs::path(opt.out) / "train.jsonl");
  save_dataset(val_set, fs::path(opt.out) / "val.jsonl");
  write_text(fs::path(opt.out) / "generator.txt", format_config(cfg.to_map()));

  std::size_t symbolic = 0, lexical = 0, prior[kNumCandidates] = {};
  for (const auto& inst : all.instances) {
    symbolic += symbolic_answer(inst, cfg) == inst.gold;
    lexical += lexical_overlap_choice(inst) == inst.gold;
    ++prior[inst.gold];
  }
  const double n = all.instances.empty() ? 1.0 : static_cast<double>(all.instances.size());
  std::size_t top = 0;
  for (auto c : prior) top = std::max(top, c);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "instances %zu (train %zu, val %zu)\nsymbolic checker %.2f%%\nno-vision lexical oracle %.2f%%\n"
                "answer-position prior %.2f%%\n",
                all.instances.size(), train_set.instances.size(), val_set.instances.size(), 100 * symbolic / n,
                100 * lexical / n, 100 * top / n);
  write_text(fs::path(opt.out) / "validation.txt", buf);
  std::cout << buf;
  return 0;
}

Dataset load_required(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("no ") + what + " dataset (set " + what + "_path or pass --" + what + ")");
  return load_dataset(path);
}

/// Dataset paths given on the command line win over the config file.
void apply_paths(TrainConfig& cfg, const std::string& train_path, const std::string& val_path) {
  if (!train_path.empty()) cfg.train_path = train_path;
  if (!val_path.empty()) cfg.val_path = val_path;
}

int run_train(const CommonOptions& opt, const ModuleFlags& flags, const std::string& train_path,
              const std::string& val_path) {
  TrainConfig cfg = load_train_config(opt, flags);
  apply_paths(cfg, train_path, val_path);
  const Dataset train_set = load_required(cfg.train_path, "train");
  const Dataset val_set = load_required(cfg.val_path, "val");
  const TrainResult result = train(cfg, train_set, val_set, &std::cout);
  write_training_outputs(result, opt.out);
  std::ostringstream table;
  write_metrics_table(table, result.report);
  std::cout << '\n' << table.str();
  return 0;
}

int run_eval(const std::string& checkpoint, const std::string& data, const std::string& out) {
  const Dataset ds = load_dataset(data);
  const Evaluation ev = evaluate(checkpoint, ds);
  fs::create_directories(out);
  std::ostringstream table, csv;
  write_evaluation_table(table, ev);
  write_evaluation_csv(csv, ev);
  write_text(fs::path(out) / "eval.txt", table.str());
  write_text(fs::path(out) / "eval.csv", csv.str());
  std::cout << table.str();
  return 0;
}

int run_dump(const std::string& checkpoint, const std::string& data, std::size_t index, const std::string& out) {
  const Dataset ds = load_dataset(data);
  if (index >= ds.instances.size()) {
    throw std::out_of_range("instance " + std::to_string(index) + " out of range (dataset has " +
                            std::to_string(ds.instances.size()) + ")");
  }
  std::size_t grid_cols = 1;
  if (auto it = ds.metadata.find("gen.grid_cols"); it != ds.metadata.end()) grid_cols = std::stoul(it->second);
  const Model model = load_model(checkpoint);
  const GraphDump dump = dump_graphs(model, ds.instances[index]);
  write_graph_dump(dump, grid_cols, out);
  write_graph_tables(std::cout, dump, grid_cols);
  return 0;
}

int run_ablate(const CommonOptions& opt, const ModuleFlags& flags, const std::string& train_path,
               const std::string& val_path, std::size_t seeds, const std::string& rows) {
  TrainConfig cfg = load_train_config(opt, flags);
  apply_paths(cfg, train_path, val_path);
  const Dataset train_set = load_required(cfg.train_path, "train");
  const Dataset val_set = load_required(cfg.val_path, "val");
  std::vector<std::uint64_t> seed_list;
  for (std::size_t k = 0; k < seeds; ++k) seed_list.push_back(cfg.seed + k);
  const auto settings = rows == "core" ? ablation_core_rows() : ablation_grid();
  const AblationTable table = run_ablation(cfg, train_set, val_set, settings, seed_list, &std::cout);
  fs::create_directories(opt.out);
  std::ostringstream text, csv;
  text << "# configuration\n" << format_config(cfg.to_map()) << '\n';
  write_ablation_table(text, table, cfg.task);
  write_ablation_csv(csv, table);
  write_text(fs::path(opt.out) / "ablation.txt", text.str());
  write_text(fs::path(opt.out) / "ablation.csv", csv.str());
  std::cout << '\n' << text.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous graph learning on synthetic multiple-choice problems"};
  app.require_subcommand(1);

  CommonOptions gen_opt, train_opt, ablate_opt;
  ModuleFlags train_flags, ablate_flags;
  std::string train_path, val_path;
  std::string eval_ckpt, eval_data, eval_out = "out";
  std::string dump_ckpt, dump_data, dump_out = "out";
  std::size_t dump_index = 0;
  std::size_t ablate_seeds = 1;
  std::string ablate_rows = "grid";

  auto* gen = app.add_subcommand("gen", "generate train.jsonl and val.jsonl");
  add_common(gen, gen_opt);

  auto* tr = app.add_subcommand("train", "train a model; writes checkpoint.bin, metrics.csv, report.txt");
  add_common(tr, train_opt);
  add_module_flags(tr, train_flags);
  tr->add_option("--train", train_path, "training dataset (overrides train_path)");
  tr->add_option("--val", val_path, "validation dataset (overrides val_path)");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  ev->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", eval_data, "dataset file")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", eval_out, "output directory")->capture_default_str();

  auto* dump = app.add_subcommand("dump-graphs", "write VAHG/QAHG adjacency and CVM votes of one instance");
  dump->add_option("--checkpoint", dump_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  dump->add_option("--data", dump_data, "dataset file")->required()->check(CLI::ExistingFile);
  dump->add_option("--index", dump_index, "instance index")->capture_default_str();
  dump->add_option("--out", dump_out, "output directory")->capture_default_str();

  auto* ab = app.add_subcommand("ablate", "train every module combination and compare");
  add_common(ab, ablate_opt);
  add_module_flags(ab, ablate_flags);
  ab->add_option("--train", train_path, "training dataset (overrides train_path)");
  ab->add_option("--val", val_path, "validation dataset (overrides val_path)");
  ab->add_option("--seeds", ablate_seeds, "number of consecutive seeds per row")->capture_default_str();
  ab->add_option("--rows", ablate_rows, "grid (all eight rows) or core (five rows)")
      ->check(CLI::IsMember({"grid", "core"}))
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return run_gen(gen_opt);
    if (*tr) return run_train(train_opt, train_flags, train_path, val_path);
    if (*ev) return run_eval(eval_ckpt, eval_data, eval_out);
    if (*dump) return run_dump(dump_ckpt, dump_data, dump_index, dump_out);
    if (*ab) return run_ablate(ablate_opt, ablate_flags, train_path, val_path, ablate_seeds, ablate_rows);
  } catch (const std::exception& e) {
    std::cerr << "hgl: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
