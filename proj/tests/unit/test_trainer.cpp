#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <set>
#include <vector>

#include <unistd.h>

#include "../support.hpp"
#include "hgl/ablation.hpp"
#include "hgl/checkpoint.hpp"
#include "hgl/generator.hpp"
#include "hgl/graph_dump.hpp"
#include "hgl/optimizer.hpp"
#include "hgl/schedule.hpp"
#include "hgl/trainer.hpp"

using namespace hgl;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("hgl_train_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- adam

/// Hand-rolled scalar Adam with decoupled decay, in long double.
struct ScalarAdam {
  long double m = 0, v = 0;
  int t = 0;
  long double step(long double w, long double g, const AdamConfig& c) {
    ++t;
    m = c.beta1 * m + (1 - c.beta1) * g;
    v = c.beta2 * v + (1 - c.beta2) * g * g;
    const long double mh = m / (1 - std::pow(static_cast<long double>(c.beta1), t));
    const long double vh = v / (1 - std::pow(static_cast<long double>(c.beta2), t));
    return w - c.learning_rate * mh / (std::sqrt(vh) + c.epsilon) - c.learning_rate * c.weight_decay * w;
  }
};

TEST(Adam, ZeroGradientAndZeroDecayLeaveWeightsUnchanged) {
  std::mt19937_64 gen(1);
  ParameterStore s;
  s.add("w", test::random_tensor(3, 3, gen));
  const Tensor before = s.value("w");
  AdamConfig c;
  c.weight_decay = 0.0;
  Adam adam(c);
  for (int i = 0; i < 5; ++i) {
    s.zero_grad();
    adam.step(s);
  }
  EXPECT_EQ(s.value("w"), before);
}

TEST(Adam, MatchesScalarOracle) {
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 gen(seed);
    ParameterStore s;
    s.add("w", test::random_tensor(2, 3, gen));
    AdamConfig c;
    c.learning_rate = 1e-2;
    c.weight_decay = 1e-3;
    Adam adam(c);
    std::vector<ScalarAdam> oracle(6);
    std::vector<long double> w(6);
    for (std::size_t i = 0; i < 6; ++i) w[i] = s.value("w").data()[i];
    for (int step = 0; step < 4; ++step) {
      const Tensor g = test::random_tensor(2, 3, gen, -2.0, 2.0);
      s.zero_grad();
      s.grad("w") = g;
      adam.step(s);
      for (std::size_t i = 0; i < 6; ++i) {
        w[i] = oracle[i].step(w[i], g.data()[i], c);
        EXPECT_NEAR(s.value("w").data()[i], static_cast<double>(w[i]), 1e-12);
      }
    }
  }
}

TEST(Adam, FirstStepMovesAgainstTheGradientByAboutLr) {
  ParameterStore s;
  s.add("w", Tensor::from_rows({{1.0, -1.0}}));
  AdamConfig c;
  c.weight_decay = 0.0;
  Adam adam(c);
  s.grad("w") = Tensor::from_rows({{0.3, -5.0}});
  adam.step(s);
  // Bias-corrected m/sqrt(v) is sign(g) on the first step.
  EXPECT_NEAR(s.value("w")(0, 0), 1.0 - c.learning_rate, 1e-10);
  EXPECT_NEAR(s.value("w")(0, 1), -1.0 + c.learning_rate, 1e-10);
}

TEST(Adam, WeightDecayAloneShrinksGeometrically) {
  ParameterStore s;
  s.add("w", Tensor::from_rows({{2.0, -3.0}}));
  AdamConfig c;
  c.learning_rate = 2e-4;
  c.weight_decay = 1e-4;
  Adam adam(c);
  double w0 = 2.0, w1 = -3.0;
  for (int i = 0; i < 10; ++i) {
    s.zero_grad();
    adam.step(s);
    w0 *= 1 - c.learning_rate * c.weight_decay;
    w1 *= 1 - c.learning_rate * c.weight_decay;
    EXPECT_DOUBLE_EQ(s.value("w")(0, 0), w0);
    EXPECT_DOUBLE_EQ(s.value("w")(0, 1), w1);
  }
}

// ---------------------------------------------------------------- schedule

TEST(Schedule, FlatHistoryHalvesOnce) {
  const std::vector<double> h{0.40, 0.40, 0.40};
  EXPECT_DOUBLE_EQ(lr_schedule(h, 2e-4), 1e-4);
}

TEST(Schedule, IncreasingHistoryKeepsTheRate) {
  const std::vector<double> h{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  EXPECT_DOUBLE_EQ(lr_schedule(h, 2e-4), 2e-4);
}

TEST(Schedule, HandTracedPlateau) {
  // 0.40 best; 0.41 improves; 0.41 stale 1; 0.41 stale 2 -> halve.
  PlateauSchedule s(2e-4);
  EXPECT_DOUBLE_EQ(s.observe(0.40), 2e-4);
  EXPECT_DOUBLE_EQ(s.observe(0.41), 2e-4);
  EXPECT_DOUBLE_EQ(s.observe(0.41), 2e-4);
  EXPECT_DOUBLE_EQ(s.observe(0.41), 1e-4);
  EXPECT_EQ(s.reductions(), 1u);
}

TEST(Schedule, CounterRestartsAfterReduction) {
  PlateauSchedule s(1.0);
  for (int i = 0; i < 5; ++i) s.observe(0.5);  // best, stale, halve, stale, halve
  EXPECT_EQ(s.reductions(), 2u);
  EXPECT_DOUBLE_EQ(s.learning_rate(), 0.25);
}

TEST(Schedule, RateNeverIncreases) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int seed = 0; seed < 20; ++seed) {
    PlateauSchedule s(2e-4);
    double prev = s.learning_rate();
    for (int e = 0; e < 30; ++e) {
      const double lr = s.observe(u(gen));
      EXPECT_LE(lr, prev);
      prev = lr;
    }
  }
}

TEST(Schedule, RejectsBadSettings) {
  EXPECT_THROW(PlateauSchedule(0.0), std::invalid_argument);
  EXPECT_THROW(PlateauSchedule(1e-3, 0), std::invalid_argument);
  EXPECT_THROW(PlateauSchedule(1e-3, 2, 1.0), std::invalid_argument);
  EXPECT_THROW(lr_schedule({}, 1e-3), std::invalid_argument);
}

// ---------------------------------------------------------------- scoring

Dataset tiny_dataset(std::size_t instances, std::uint64_t seed) {
  GeneratorConfig g;
  g.instances = instances;
  g.seed = seed;
  g.grid_rows = 4;
  g.grid_cols = 3;
  g.object_types = 3;
  g.attributes = 5;
  g.objects_min = 2;
  g.objects_max = 2;
  g.channels = 14;
  g.vocab_size = 16;
  return generate(g);
}

TEST(ScoreChoices, MatchesHandTallyOnTwentyInstances) {
  const Dataset ds = tiny_dataset(20, 5);
  // Hand-picked choices: scenes 0..9; answer right on scenes 0-6, rationale
  // right on scenes 0-3 and 8-9, so both right on scenes 0-3.
  std::vector<std::size_t> chosen(20);
  for (std::size_t s = 0; s < 10; ++s) {
    const auto& a = ds.instances[2 * s];
    const auto& r = ds.instances[2 * s + 1];
    chosen[2 * s] = s <= 6 ? a.gold : (a.gold + 1) % 4;
    chosen[2 * s + 1] = (s <= 3 || s >= 8) ? r.gold : (r.gold + 2) % 4;
  }
  const auto m = score_choices(ds, chosen).metrics;
  EXPECT_EQ(m.answer_count, 10u);
  EXPECT_EQ(m.rationale_count, 10u);
  EXPECT_EQ(m.pair_count, 10u);
  EXPECT_DOUBLE_EQ(m.answer_accuracy, 0.7);
  EXPECT_DOUBLE_EQ(m.rationale_accuracy, 0.6);
  EXPECT_DOUBLE_EQ(m.combined_accuracy, 0.4);
}

TEST(ScoreChoices, OracleChoicesScorePerfectly) {
  const Dataset ds = tiny_dataset(40, 6);
  GeneratorConfig cfg = generator_config_from_metadata(ds.metadata);
  std::vector<std::size_t> chosen;
  for (const auto& inst : ds.instances) chosen.push_back(*symbolic_answer(inst, cfg));
  const auto m = score_choices(ds, chosen).metrics;
  EXPECT_DOUBLE_EQ(m.answer_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(m.rationale_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(m.combined_accuracy, 1.0);
}

TEST(ScoreChoices, CombinedNeverExceedsEitherTask) {
  const Dataset ds = tiny_dataset(60, 7);
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < ds.instances.size(); ++i) chosen.push_back(gen() % 4);
    const auto m = score_choices(ds, chosen).metrics;
    EXPECT_LE(m.combined_accuracy, std::min(m.answer_accuracy, m.rationale_accuracy));
  }
  // Also when one task is missing entirely.
  const Dataset answers = filter_task(ds, Task::kAnswer);
  const auto m = score_choices(answers, std::vector<std::size_t>(answers.instances.size(), 0)).metrics;
  EXPECT_DOUBLE_EQ(m.combined_accuracy, 0.0);
}

// ---------------------------------------------------------------- train

TrainConfig tiny_train_config() {
  TrainConfig c;
  c.dim = 6;
  c.max_epochs = 2;
  c.batch_size = 8;
  c.learning_rate = 1e-2;
  c.seed = 3;
  return c;
}

TEST(Train, ZeroEpochsEmitsInitialCheckpointAndEmptyTable) {
  const Dataset ds = tiny_dataset(20, 1);
  TrainConfig c = tiny_train_config();
  c.max_epochs = 0;
  const TrainResult r = train(c, ds, ds);
  EXPECT_TRUE(r.report.epochs.empty());
  EXPECT_FALSE(r.report.best_epoch.has_value());
  const Model fresh(r.model_config, c.seed);
  for (const auto& [name, e] : fresh.params()) EXPECT_EQ(r.best_params.value(name), e.value) << name;

  TempDir dir;
  write_training_outputs(r, dir.path());
  EXPECT_TRUE(fs::exists(dir.path() / "checkpoint.bin"));
  std::istringstream csv(read_file(dir.path() / "metrics.csv"));
  std::string header, extra;
  std::getline(csv, header);
  EXPECT_EQ(header.rfind("epoch,", 0), 0u);
  EXPECT_FALSE(std::getline(csv, extra));
}

TEST(Train, SameSeedGivesByteIdenticalOutputs) {
  const Dataset train_set = tiny_dataset(40, 2);
  const Dataset val_set = tiny_dataset(20, 3);
  TempDir a, b;
  write_training_outputs(train(tiny_train_config(), train_set, val_set), a.path());
  write_training_outputs(train(tiny_train_config(), train_set, val_set), b.path());
  for (const char* f : {"checkpoint.bin", "metrics.csv", "report.txt"})
    EXPECT_EQ(read_file(a.path() / f), read_file(b.path() / f)) << f;
}

TEST(Train, ReportIsConsistent) {
  const Dataset train_set = tiny_dataset(40, 2);
  const Dataset val_set = tiny_dataset(20, 3);
  TrainConfig c = tiny_train_config();
  c.max_epochs = 4;
  const TrainResult r = train(c, train_set, val_set);
  ASSERT_EQ(r.report.epochs.size(), 4u);
  ASSERT_TRUE(r.report.best_epoch.has_value());
  double prev_lr = c.learning_rate;
  for (const auto& e : r.report.epochs) {
    EXPECT_LE(e.learning_rate, prev_lr);
    prev_lr = e.learning_rate;
    EXPECT_TRUE(std::isfinite(e.train_loss));
    EXPECT_LE(e.val.combined_accuracy, std::min(e.val.answer_accuracy, e.val.rationale_accuracy));
    EXPECT_LE(selection_accuracy(e.val, c.task), selection_accuracy(r.report.best, c.task));
  }
  // The kept parameters reproduce the best epoch's validation metrics.
  Model m(r.model_config, 0);
  assign_parameters(m.params(), r.best_params);
  const auto ev = evaluate(m, val_set).metrics;
  EXPECT_DOUBLE_EQ(ev.answer_accuracy, r.report.best.answer_accuracy);
  EXPECT_DOUBLE_EQ(ev.rationale_accuracy, r.report.best.rationale_accuracy);
}

TEST(Train, CheckpointReloadsAndEvaluatesIdentically) {
  const Dataset train_set = tiny_dataset(40, 2);
  const Dataset val_set = tiny_dataset(20, 3);
  TempDir dir;
  const TrainResult r = train(tiny_train_config(), train_set, val_set);
  write_training_outputs(r, dir.path());
  const auto from_file = evaluate(dir.path() / "checkpoint.bin", val_set).metrics;
  EXPECT_DOUBLE_EQ(from_file.answer_accuracy, r.report.best.answer_accuracy);
  EXPECT_DOUBLE_EQ(from_file.combined_accuracy, r.report.best.combined_accuracy);
}

TEST(Train, IncompatibleDatasetIsRejected) {
  const Dataset train_set = tiny_dataset(20, 2);
  TempDir dir;
  write_training_outputs(train(tiny_train_config(), train_set, train_set), dir.path());
  const Dataset other = generate(GeneratorConfig{});  // 20 channels instead of 14
  EXPECT_THROW(evaluate(dir.path() / "checkpoint.bin", other), std::exception);
}

TEST(TrainConfig, RejectsOutOfRangeValues) {
  auto expect_reject = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), ConfigError);
  };
  expect_reject([](TrainConfig& c) { c.learning_rate = 0.0; });
  expect_reject([](TrainConfig& c) { c.plateau_patience = 0; });
  expect_reject([](TrainConfig& c) { c.lr_factor = 1.0; });
  expect_reject([](TrainConfig& c) { c.batch_size = 0; });
  expect_reject([](TrainConfig& c) { c.adam_beta1 = 1.0; });
}

TEST(TrainConfig, DefaultsAndConfigFileRoundTrip) {
  const TrainConfig d;
  EXPECT_DOUBLE_EQ(d.learning_rate, 2e-4);
  EXPECT_DOUBLE_EQ(d.adam_beta1, 0.9);
  EXPECT_DOUBLE_EQ(d.weight_decay, 1e-4);
  EXPECT_EQ(d.plateau_patience, 2u);
  EXPECT_DOUBLE_EQ(d.lr_factor, 0.5);
  EXPECT_EQ(d.max_epochs, 20u);
  TrainConfig c;
  c.learning_rate = 3e-3;
  c.use_qahg = false;
  c.adjacency_mode = SoftmaxMode::kPerRow;
  c.task = TrainTask::kRationale;
  ConfigMap map = ConfigMap::parse(format_config(c.to_map()));
  EXPECT_EQ(TrainConfig::from_config(map).to_map(), c.to_map());
  EXPECT_THROW(TrainConfig::from_config(ConfigMap::parse("lerning_rate = 1\n")), ConfigError);
}

// ---------------------------------------------------------------- graph dump

TEST(DumpGraphs, LabelsMatchTokenIds) {
  const Dataset ds = tiny_dataset(4, 9);
  TrainConfig c = tiny_train_config();
  const Model m(c.model(16, 14), 1);
  for (const auto& inst : ds.instances) {
    const GraphDump d = dump_graphs(m, inst);
    ASSERT_EQ(d.question_labels.size(), inst.question.size());
    for (std::size_t i = 0; i < inst.question.size(); ++i)
      EXPECT_EQ(d.question_labels[i], std::to_string(inst.question[i]));
    for (std::size_t k = 0; k < kNumCandidates; ++k) {
      ASSERT_EQ(d.answer_labels[k].size(), inst.candidates[k].size());
      for (std::size_t b = 0; b < inst.candidates[k].size(); ++b)
        EXPECT_EQ(d.answer_labels[k][b], std::to_string(inst.candidates[k][b]));
      ASSERT_TRUE(d.vahg[k].has_value());
      ASSERT_TRUE(d.qahg[k].has_value());
      EXPECT_EQ(d.vahg[k]->weights.rows(), inst.boxes.size());
      EXPECT_EQ(d.vahg[k]->weights.cols(), inst.candidates[k].size());
      EXPECT_EQ(d.qahg[k]->weights.rows(), inst.question.size());
    }
    ASSERT_TRUE(d.votes.has_value());
    EXPECT_EQ(d.votes->rows(), inst.scene.rows());
    EXPECT_EQ(d.object_labels.front(), "obj0");
  }
}

TEST(DumpGraphs, FreshModelOnZeroFeaturesIsNearUniform) {
  Instance inst = tiny_dataset(2, 9).instances[0];
  inst.scene = Tensor::zeros(inst.scene.rows(), inst.scene.cols());
  TrainConfig c = tiny_train_config();
  Model m(c.model(16, 14), 1);
  // Zero token table: every word and object feature is zero.
  for (auto& v : m.params().value("embed.tokens").data()) v = 0.0;
  const GraphDump d = dump_graphs(m, inst);
  for (std::size_t k = 0; k < kNumCandidates; ++k) {
    const Tensor& a = d.vahg[k]->weights;
    const double u = 1.0 / static_cast<double>(a.size());
    for (double v : a.data()) EXPECT_NEAR(v, u, 1e-12);
  }
  const double u = 1.0 / static_cast<double>(d.votes->cols());
  for (double v : d.votes->data()) EXPECT_NEAR(v, u, 1e-12);
}

TEST(DumpGraphs, DisabledModulesAreAbsentAndFilesWritten) {
  const Instance inst = tiny_dataset(2, 9).instances[0];
  TrainConfig c = tiny_train_config();
  c.use_vahg = false;
  c.use_cvm = false;
  const Model m(c.model(16, 14), 1);
  const GraphDump d = dump_graphs(m, inst);
  EXPECT_FALSE(d.vahg[0].has_value());
  EXPECT_TRUE(d.qahg[0].has_value());
  EXPECT_FALSE(d.votes.has_value());
  TempDir dir;
  write_graph_dump(d, 3, dir.path());
  EXPECT_TRUE(fs::exists(dir.path() / "graphs.txt"));
  EXPECT_TRUE(fs::exists(dir.path() / "qahg_c0.csv"));
  EXPECT_FALSE(fs::exists(dir.path() / "votes.csv"));
}

// ---------------------------------------------------------------- ablation

TEST(Ablation, GridCoversAllEightSettings) {
  const auto grid = ablation_grid();
  ASSERT_EQ(grid.size(), 8u);
  std::set<int> masks;
  for (const auto& s : grid) masks.insert(s.use_vahg * 4 + s.use_qahg * 2 + s.use_cvm);
  EXPECT_EQ(masks.size(), 8u);
  EXPECT_TRUE(grid.front().use_vahg && grid.front().use_qahg && grid.front().use_cvm);
  EXPECT_FALSE(grid.back().use_vahg || grid.back().use_qahg || grid.back().use_cvm);
  const auto core = ablation_core_rows();
  ASSERT_EQ(core.size(), 5u);
  EXPECT_EQ(core.front().name, grid.front().name);
}

TEST(Ablation, RunsEverySettingAndSeed) {
  const Dataset train_set = tiny_dataset(20, 2);
  const Dataset val_set = tiny_dataset(12, 3);
  TrainConfig c = tiny_train_config();
  c.max_epochs = 1;
  const auto settings = ablation_core_rows();
  const AblationTable t = run_ablation(c, train_set, val_set, settings, {1, 2});
  ASSERT_EQ(t.runs.size(), settings.size() * 2);
  EXPECT_EQ(t.at(1, 1).seed, 2u);
  EXPECT_EQ(t.at(1, 1).setting.name, settings[1].name);
  std::ostringstream table, csv;
  write_ablation_table(table, t, c.task);
  write_ablation_csv(csv, t);
  for (const auto& s : settings) EXPECT_NE(table.str().find(s.name), std::string::npos);
  const std::string rows = csv.str();
  EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 1 + 10);
}

}  // namespace
