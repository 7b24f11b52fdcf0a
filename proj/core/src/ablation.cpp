#include "hgl/ablation.hpp"

#include <cstdio>

namespace hgl {

std::vector<AblationSetting> ablation_grid() {
  std::vector<AblationSetting> rows;
  for (int mask = 7; mask >= 0; --mask) {
    AblationSetting s;
    s.use_vahg = mask & 4;
    s.use_qahg = mask & 2;
    s.use_cvm = mask & 1;
    if (mask == 7) {
      s.name = "full";
    } else {
      for (auto [on, label] : {std::pair{s.use_vahg, "no-vahg"}, {s.use_qahg, "no-qahg"}, {s.use_cvm, "no-cvm"}}) {
        if (on) continue;
        if (!s.name.empty()) s.name += '+';
        s.name += label;
      }
    }
    rows.push_back(s);
  }
  return rows;
}

std::vector<AblationSetting> ablation_core_rows() {
  return {{"full", true, true, true},
          {"no-vahg", false, true, true},
          {"no-qahg", true, false, true},
          {"no-cvm", true, true, false},
          {"no-vahg+no-qahg", false, false, true}};
}

double AblationTable::mean_accuracy(std::size_t setting, TrainTask task) const {
  double sum = 0.0;
  for (std::size_t s = 0; s < seeds.size(); ++s) sum += selection_accuracy(at(setting, s).best, task);
  return seeds.empty() ? 0.0 : sum / static_cast<double>(seeds.size());
}

AblationTable run_ablation(const TrainConfig& base, const Dataset& train_set, const Dataset& val_set,
                           const std::vector<AblationSetting>& settings, const std::vector<std::uint64_t>& seeds,
                           std::ostream* progress) {
  AblationTable table{settings, seeds, {}};
  for (const auto& setting : settings) {
    for (auto seed : seeds) {
      TrainConfig cfg = base;
      cfg.use_vahg = setting.use_vahg;
      cfg.use_qahg = setting.use_qahg;
      cfg.use_cvm = setting.use_cvm;
      cfg.seed = seed;
      const TrainResult r = train(cfg, train_set, val_set);
      table.runs.push_back({setting, seed, r.report.best});
      if (progress) {
        char line[160];
        std::snprintf(line, sizeof line, "%-24s seed %-6llu Q->A %6.2f  QA->R %6.2f  Q->AR %6.2f  (%.1fs)\n",
                      setting.name.c_str(), static_cast<unsigned long long>(seed), 100 * r.report.best.answer_accuracy,
                      100 * r.report.best.rationale_accuracy, 100 * r.report.best.combined_accuracy,
                      r.report.wall_seconds);
        *progress << line << std::flush;
      }
    }
  }
  return table;
}

void write_ablation_table(std::ostream& os, const AblationTable& table, TrainTask task) {
  char line[200];
  std::snprintf(line, sizeof line, "%-24s %5s %5s %5s %9s %9s %9s %9s\n", "setting", "VAHG", "QAHG", "CVM", "Q->A",
                "QA->R", "Q->AR", "select");
  os << line;
  for (std::size_t i = 0; i < table.settings.size(); ++i) {
    const auto& s = table.settings[i];
    double a = 0, r = 0, c = 0;
    for (std::size_t k = 0; k < table.seeds.size(); ++k) {
      a += table.at(i, k).best.answer_accuracy;
      r += table.at(i, k).best.rationale_accuracy;
      c += table.at(i, k).best.combined_accuracy;
    }
    const double n = table.seeds.empty() ? 1.0 : static_cast<double>(table.seeds.size());
    std::snprintf(line, sizeof line, "%-24s %5s %5s %5s %9.2f %9.2f %9.2f %9.2f\n", s.name.c_str(),
                  s.use_vahg ? "x" : "-", s.use_qahg ? "x" : "-", s.use_cvm ? "x" : "-", 100 * a / n, 100 * r / n,
                  100 * c / n, 100 * table.mean_accuracy(i, task));
    os << line;
  }
  os << "\nmeans over " << table.seeds.size() << " seed(s); 'select' is the checkpoint-selection accuracy\n";
}

void write_ablation_csv(std::ostream& os, const AblationTable& table) {
  os << "setting,use_vahg,use_qahg,use_cvm,seed,val_answer_acc,val_rationale_acc,val_combined_acc\n";
  for (const auto& r : table.runs) {
    char line[200];
    std::snprintf(line, sizeof line, "%s,%d,%d,%d,%llu,%.17g,%.17g,%.17g\n", r.setting.name.c_str(), r.setting.use_vahg,
                  r.setting.use_qahg, r.setting.use_cvm, static_cast<unsigned long long>(r.seed),
                  r.best.answer_accuracy, r.best.rationale_accuracy, r.best.combined_accuracy);
    os << line;
  }
}

}  // namespace hgl
