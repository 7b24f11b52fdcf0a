#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hgl/config_file.hpp"
#include "hgl/dataset.hpp"
#include "hgl/model.hpp"
#include "hgl/optimizer.hpp"

namespace hgl {

/// Which problems the trainer fits. Evaluation always covers every problem in
/// the validation set.
enum class TrainTask { kBoth, kAnswer, kRationale };

std::string_view to_string(TrainTask t);
TrainTask parse_train_task(std::string_view text);

struct TrainConfig {
  double learning_rate = 2e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double weight_decay = 1e-4;
  std::size_t plateau_patience = 2;
  double lr_factor = 0.5;
  std::size_t max_epochs = 20;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  TrainTask task = TrainTask::kBoth;

  std::size_t dim = 32;
  std::size_t hidden = 0;
  double embedding_scale = 1.0;
  Activation activation = Activation::kRelu;
  SoftmaxMode adjacency_mode = SoftmaxMode::kGlobal;
  CvmResidualMode cvm_residual = CvmResidualMode::kContext;
  bool use_vahg = true;
  bool use_qahg = true;
  bool use_cvm = true;

  std::string train_path;
  std::string val_path;

  static TrainConfig from_config(const ConfigMap& cfg);
  /// Every setting as text; echoed verbatim into reports and checkpoints.
  std::map<std::string, std::string> to_map() const;
  /// Throws ConfigError on out-of-range values.
  void validate() const;

  AdamConfig adam() const;
  ModelConfig model(std::size_t vocab_size, std::size_t channels) const;
};

/// Per-instance outcome kept for the evaluation report.
struct InstanceResult {
  std::size_t index = 0;
  Task task = Task::kAnswer;
  std::size_t gold = 0;
  std::size_t chosen = 0;
  double w_o = 0.0;  // modality weight of the vision branch, averaged over the four candidates
};

struct EvalMetrics {
  std::size_t answer_count = 0;
  std::size_t rationale_count = 0;
  std::size_t pair_count = 0;
  double answer_accuracy = 0.0;
  double rationale_accuracy = 0.0;
  /// Scenes with both problems right, over max(answer_count, rationale_count),
  /// so it never exceeds either task accuracy.
  double combined_accuracy = 0.0;
  double mean_w_o = 0.0;
  double min_w_o = 0.0;
  double max_w_o = 0.0;
};

struct Evaluation {
  EvalMetrics metrics;
  std::vector<InstanceResult> instances;
};

/// Tallies accuracies from given choices (one per instance, in order). The
/// modality weights default to zero when absent.
Evaluation score_choices(const Dataset& dataset, const std::vector<std::size_t>& chosen,
                         const std::vector<double>& w_o = {});

Evaluation evaluate(const Model& model, const Dataset& dataset);
/// Rebuilds the model described by the checkpoint meta, then evaluates.
Evaluation evaluate(const std::filesystem::path& checkpoint, const Dataset& dataset);

Model load_model(const std::filesystem::path& checkpoint);

struct EpochRecord {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  EvalMetrics val;
};

struct MetricsReport {
  std::map<std::string, std::string> config;
  std::vector<EpochRecord> epochs;
  std::optional<std::size_t> best_epoch;  // none when no epoch ran
  EvalMetrics best;
  double wall_seconds = 0.0;  // reported separately; never part of the deterministic files
};

struct TrainResult {
  ParameterStore best_params;
  ModelConfig model_config;
  MetricsReport report;
};

/// Accuracy used for checkpoint selection and the learning-rate schedule.
double selection_accuracy(const EvalMetrics& m, TrainTask task);

/// Fits a model; `progress` (optional) receives one line per epoch.
TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& val_set,
                  std::ostream* progress = nullptr);

/// Writes checkpoint.bin, metrics.csv, report.txt and timing.txt under `dir`.
void write_training_outputs(const TrainResult& result, const std::filesystem::path& dir);

void write_metrics_csv(std::ostream& os, const MetricsReport& report);
void write_metrics_table(std::ostream& os, const MetricsReport& report);
void write_evaluation_table(std::ostream& os, const Evaluation& eval);
void write_evaluation_csv(std::ostream& os, const Evaluation& eval);

}  // namespace hgl
