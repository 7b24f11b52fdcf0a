#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace hgl {

/// Multiplies the learning rate by `factor` once validation accuracy has not
/// strictly improved on its best value for `patience` consecutive epochs.
/// The counter restarts on every improvement and after every reduction.
class PlateauSchedule {
 public:
  PlateauSchedule(double learning_rate, std::size_t patience = 2, double factor = 0.5);

  /// Records one epoch's validation accuracy and returns the rate for the next.
  double observe(double accuracy);

  double learning_rate() const noexcept { return lr_; }
  std::size_t reductions() const noexcept { return reductions_; }

 private:
  double lr_;
  std::size_t patience_;
  double factor_;
  std::optional<double> best_;
  std::size_t stale_ = 0;
  std::size_t reductions_ = 0;
};

/// Replays a whole accuracy history from `initial_lr`; returns the final rate.
double lr_schedule(std::span<const double> history, double initial_lr, std::size_t patience = 2, double factor = 0.5);

}  // namespace hgl
