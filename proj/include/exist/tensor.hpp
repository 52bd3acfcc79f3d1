#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "exist/errors.hpp"

namespace exist {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape);

/// Dense row-major array.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T(0)) : shape(std::move(s)), data(shape_size(shape), fill) {}
  Tensor(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != shape_size(shape)) {
      throw ShapeError("tensor data length " + std::to_string(data.size()) + " does not match shape " +
                       shape_string(shape));
    }
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  bool empty() const { return data.empty(); }

  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Trainable array with its gradient and Adam moments.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> adam_m;
  Tensor<T> adam_v;
  bool frozen = false;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v, bool is_frozen = false)
      : name(std::move(n)),
        value(std::move(v)),
        grad(value.shape),
        adam_m(value.shape),
        adam_v(value.shape),
        frozen(is_frozen) {}

  void zero_grad() { grad.fill(T(0)); }
};

}  // namespace exist
