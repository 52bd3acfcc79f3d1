#include "exist/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <vector>

#include "exist/rng.hpp"

namespace exist {

GradCheckResult gradient_check(std::span<Parameter<double>* const> params,
                               const std::function<double(bool)>& loss, const GradCheckOptions& opts) {
  for (auto* p : params) p->zero_grad();
  loss(true);
  std::vector<Tensor<double>> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) analytic.push_back(p->grad);

  Rng rng(opts.seed);
  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = *params[pi];
    if (p.frozen) continue;
    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > opts.per_parameter) {
      rng.shuffle(coords);
      coords.resize(opts.per_parameter);
    }
    for (std::size_t i : coords) {
      const double saved = p.value[i];
      const double ga = analytic[pi][i];
      double err = std::numeric_limits<double>::infinity();
      double h = opts.step;
      for (int k = 0; k < 3; ++k, h /= 10.0) {
        p.value[i] = saved + h;
        const double up = loss(false);
        p.value[i] = saved - h;
        const double down = loss(false);
        const double numeric = (up - down) / (2.0 * h);
        err = std::min(err, std::abs(ga - numeric) / std::max(1e-8, std::abs(ga) + std::abs(numeric)));
      }
      p.value[i] = saved;
      if (err > result.max_relative_error || result.coordinates == 0) {
        result.max_relative_error = err;
        result.worst_parameter = p.name;
        result.worst_index = i;
      }
      ++result.coordinates;
    }
  }
  return result;
}

}  // namespace exist
