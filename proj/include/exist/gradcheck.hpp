#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "exist/tensor.hpp"

namespace exist {

struct GradCheckOptions {
  double step = 1e-3;
  /// Coordinates checked per parameter tensor; all of them when the tensor is smaller.
  std::size_t per_parameter = 64;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst_parameter;  // where the maximum occurred
  std::size_t worst_index = 0;
};

/// Compares analytic gradients with central finite differences.
///
/// `loss` must return the scalar loss for the current parameter values; when
/// its argument is true it must also leave d(loss)/d(param) in every
/// Parameter::grad (the checker zeroes grads before that call). Frozen
/// parameters are skipped. Per coordinate the error is
/// |g_a - g_n| / max(1e-8, |g_a| + |g_n|), taken at the best of the central
/// differences with steps h, h/10 and h/100: large steps can straddle a ReLU
/// or max-pool switch and small ones lose tiny gradients to rounding. The
/// maximum over coordinates is returned.
GradCheckResult gradient_check(std::span<Parameter<double>* const> params,
                               const std::function<double(bool with_grad)>& loss, const GradCheckOptions& opts = {});

}  // namespace exist
