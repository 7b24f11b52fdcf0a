#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "hgl/parameter_store.hpp"

namespace hgl {

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-4;  // decoupled: applied to the weights, not the moments
};

/// Adam with bias-corrected moments and decoupled weight decay:
///
///   m = b1 m + (1 - b1) g          v = b2 v + (1 - b2) g^2
///   w -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps) + lr * wd * w
class Adam {
 public:
  explicit Adam(AdamConfig config) : config_(config) {}

  /// One update of every parameter from its accumulated gradient.
  void step(ParameterStore& params);

  double learning_rate() const noexcept { return config_.learning_rate; }
  void set_learning_rate(double lr) noexcept { config_.learning_rate = lr; }
  const AdamConfig& config() const noexcept { return config_; }
  std::size_t steps() const noexcept { return t_; }

 private:
  struct Moments {
    Tensor m;
    Tensor v;
  };
  AdamConfig config_;
  std::size_t t_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace hgl
