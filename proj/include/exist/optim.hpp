#pragma once

#include <cstddef>
#include <span>

#include "exist/tensor.hpp"

namespace exist {

struct AdamConfig {
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam. Frozen parameters are skipped entirely.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(std::span<Parameter<T>* const> params);
  std::size_t steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
};

template <typename T>
void zero_grad(std::span<Parameter<T>* const> params) {
  for (auto* p : params) p->zero_grad();
}

}  // namespace exist
