#include "exist/optim.hpp"

#include <cmath>

namespace exist {

template <typename T>
void Adam<T>::step(std::span<Parameter<T>* const> params) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
  for (auto* p : params) {
    if (p->frozen) continue;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const T g = p->grad[i];
      p->adam_m[i] = b1 * p->adam_m[i] + (T(1) - b1) * g;
      p->adam_v[i] = b2 * p->adam_v[i] + (T(1) - b2) * g * g;
      const double m_hat = static_cast<double>(p->adam_m[i]) / c1;
      const double v_hat = static_cast<double>(p->adam_v[i]) / c2;
      p->value[i] -= static_cast<T>(cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon));
    }
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace exist
