#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hgl/parameter_store.hpp"
#include "hgl/tape.hpp"

namespace hgl {

/// Builds a scalar on a fresh tape from the current parameter values.
using ScalarForward = std::function<Var(Tape&)>;

struct GradCheckOptions {
  double step = 1e-5;
  /// Coordinates sampled per parameter; 0 checks every coordinate.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
  /// Restrict the check to these parameters (empty = all).
  std::vector<std::string> only;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coords_checked = 0;
};

/// |a - n| / max(1e-8, |a| + |n|)
double gradient_relative_error(double analytic, double numeric);

/// Compares tape gradients against central differences f(p+h) - f(p-h) / 2h.
/// Parameters are restored exactly afterwards; the store's gradients hold the
/// analytic values on return.
GradCheckResult finite_diff_check(const ScalarForward& forward, ParameterStore& params,
                                  const GradCheckOptions& options = {});

}  // namespace hgl
