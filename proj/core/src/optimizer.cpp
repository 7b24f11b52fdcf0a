#include "hgl/optimizer.hpp"

#include <cmath>

namespace hgl {

void Adam::step(ParameterStore& params) {
  ++t_;
  const double lr = config_.learning_rate;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (auto& [name, entry] : params) {
    auto [it, fresh] = state_.try_emplace(name);
    if (fresh) {
      it->second.m = Tensor(entry.value.shape(), std::vector<double>(entry.value.size(), 0.0));
      it->second.v = it->second.m;
    }
    auto w = entry.value.data();
    auto g = entry.grad.data();
    auto m = it->second.m.data();
    auto v = it->second.v.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon) + lr * config_.weight_decay * w[i];
    }
  }
}

}  // namespace hgl
