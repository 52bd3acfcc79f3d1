#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "exist/kernels.hpp"
#include "exist/rng.hpp"
#include "exist/tensor.hpp"

namespace exist {

/// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Records a forward pass for reverse-mode differentiation. Parameter
/// gradients are accumulated straight into Parameter::grad (skipped when the
/// parameter is frozen); intermediate gradients live on the tape.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor<T>& out_grad)>;

  /// Leaf node; its gradient is available after backward().
  Var constant(Tensor<T> value) { return push(std::move(value), nullptr); }

  Var push(Tensor<T> value, BackwardFn backward) {
    nodes_.push_back({std::move(value), Tensor<T>{}, std::move(backward)});
    return Var{nodes_.size() - 1};
  }

  const Tensor<T>& value(Var v) const { return nodes_.at(v.id).value; }

  /// Gradient of the last backward() target w.r.t. this node (zeros if unreached).
  const Tensor<T>& grad(Var v) { return grad_mut(v); }

  Tensor<T>& grad_mut(Var v) {
    auto& n = nodes_.at(v.id);
    if (n.grad.shape != n.value.shape) n.grad = Tensor<T>(n.value.shape);
    return n.grad;
  }

  /// Seeds d(loss)/d(loss) = 1 and propagates to every recorded node.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

template <typename T>
struct LstmLayer {
  Parameter<T> wx;  // [D x 4H]
  Parameter<T> wh;  // [H x 4H]
  Parameter<T> b;   // [4H]

  LstmWeightsView<T> view() const { return {wx.value, wh.value, b.value}; }
};

namespace nn {

/// Row lookup: ids [B*L] -> [B x L x D]. PAD (id 0) yields a zero vector and
/// row 0 never receives gradient.
template <typename T>
Var embedding(Tape<T>& tape, Parameter<T>& table, std::span<const std::int32_t> ids, std::size_t batch,
              std::size_t len);

template <typename T>
Var dense(Tape<T>& tape, Var x, Parameter<T>& w, Parameter<T>& b);

template <typename T>
Var conv1d(Tape<T>& tape, Var x, Parameter<T>& filters, Parameter<T>& bias);

template <typename T>
Var max_pool_time(Tape<T>& tape, Var x);

/// [B x H], or [B x 2H] when `backward` is given.
template <typename T>
Var lstm(Tape<T>& tape, Var x, LstmLayer<T>& forward, LstmLayer<T>* backward, std::span<const std::size_t> lengths);

/// Mean of the first lengths[b] steps of [B x L x D]; zero when lengths[b] == 0.
template <typename T>
Var masked_mean(Tape<T>& tape, Var x, std::span<const std::size_t> lengths);

/// Concatenates [B x n_i] tensors along the feature axis.
template <typename T>
Var concat(Tape<T>& tape, std::span<const Var> parts);

template <typename T>
Var relu(Tape<T>& tape, Var x);

/// Inverted dropout; identity when not training or rate == 0.
template <typename T>
Var dropout(Tape<T>& tape, Var x, double rate, Rng& rng, bool training);

template <typename T>
Var sigmoid(Tape<T>& tape, Var x);

template <typename T>
Var softmax(Tape<T>& tape, Var x);

/// Weighted mean cross-entropy from logits [B x K]. K == 1 is the binary
/// (sigmoid) case with targets in {0, 1}; otherwise softmax over K classes.
template <typename T>
Var cross_entropy_with_logits(Tape<T>& tape, Var logits, std::span<const int> targets,
                              std::span<const double> class_weights = {});

/// Scalar sum of all elements.
template <typename T>
Var sum(Tape<T>& tape, Var x);

}  // namespace nn
}  // namespace exist
