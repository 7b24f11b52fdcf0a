#include "hgl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hgl/rng.hpp"

namespace hgl {
namespace {

double evaluate(const ScalarForward& forward) {
  Tape tape;
  return forward(tape).value().item();
}

}  // namespace

double gradient_relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

GradCheckResult finite_diff_check(const ScalarForward& forward, ParameterStore& params,
                                  const GradCheckOptions& options) {
  {
    Tape tape;
    Var loss = forward(tape);
    backward(tape, loss, params);
  }

  GradCheckResult result;
  Rng rng(options.seed);
  for (auto& [name, entry] : params) {
    if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), name) == options.only.end()) {
      continue;
    }
    std::vector<std::size_t> coords(entry.value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_param && coords.size() > options.max_coords_per_param) {
      rng.shuffle(std::span<std::size_t>(coords));
      coords.resize(options.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (auto i : coords) {
      const double original = entry.value[i];
      entry.value[i] = original + options.step;
      const double up = evaluate(forward);
      entry.value[i] = original - options.step;
      const double down = evaluate(forward);
      entry.value[i] = original;

      const double numeric = (up - down) / (2.0 * options.step);
      const double analytic = entry.grad[i];
      const double err = gradient_relative_error(analytic, numeric);
      ++result.coords_checked;
      if (result.worst_param.empty() || err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = name;
        result.worst_index = i;
        result.worst_analytic = analytic;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace hgl
