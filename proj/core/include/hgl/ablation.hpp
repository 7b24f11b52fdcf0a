#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "hgl/trainer.hpp"

namespace hgl {

/// Module switches of one ablation row.
struct AblationSetting {
  std::string name;
  bool use_vahg = true;
  bool use_qahg = true;
  bool use_cvm = true;
};

/// All eight on/off combinations, full model first, everything-off last.
std::vector<AblationSetting> ablation_grid();
/// Full model, the three single-module ablations and the no-graph baseline.
std::vector<AblationSetting> ablation_core_rows();

struct AblationRun {
  AblationSetting setting;
  std::uint64_t seed = 0;
  EvalMetrics best;  // validation metrics of the selected checkpoint
};

struct AblationTable {
  std::vector<AblationSetting> settings;
  std::vector<std::uint64_t> seeds;
  std::vector<AblationRun> runs;  // settings-major, seeds-minor

  const AblationRun& at(std::size_t setting, std::size_t seed) const { return runs[setting * seeds.size() + seed]; }
  /// Mean over seeds of the selection accuracy.
  double mean_accuracy(std::size_t setting, TrainTask task) const;
};

AblationTable run_ablation(const TrainConfig& base, const Dataset& train_set, const Dataset& val_set,
                           const std::vector<AblationSetting>& settings, const std::vector<std::uint64_t>& seeds,
                           std::ostream* progress = nullptr);

void write_ablation_table(std::ostream& os, const AblationTable& table, TrainTask task);
void write_ablation_csv(std::ostream& os, const AblationTable& table);

}  // namespace hgl
