#include "hgl/schedule.hpp"

#include <stdexcept>

namespace hgl {

PlateauSchedule::PlateauSchedule(double learning_rate, std::size_t patience, double factor)
    : lr_(learning_rate), patience_(patience), factor_(factor) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (patience == 0) throw std::invalid_argument("plateau patience must be at least 1");
  if (!(factor > 0.0 && factor < 1.0)) throw std::invalid_argument("lr factor must lie in (0, 1)");
}

double PlateauSchedule::observe(double accuracy) {
  if (!best_ || accuracy > *best_) {
    best_ = accuracy;
    stale_ = 0;
    return lr_;
  }
  if (++stale_ >= patience_) {
    lr_ *= factor_;
    stale_ = 0;
    ++reductions_;
  }
  return lr_;
}

double lr_schedule(std::span<const double> history, double initial_lr, std::size_t patience, double factor) {
  if (history.empty()) throw std::invalid_argument("lr_schedule needs a non-empty accuracy history");
  PlateauSchedule s(initial_lr, patience, factor);
  for (double acc : history) s.observe(acc);
  return s.learning_rate();
}

}  // namespace hgl
