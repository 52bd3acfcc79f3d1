#pragma once

// Forward and backward kernels of the layers used by the model zoo. Backward
// kernels accumulate (+=) into the gradient tensors they are given; a null
// pointer skips that gradient.

#include <cstddef>
#include <span>
#include <vector>

#include "exist/tensor.hpp"

namespace exist {

/// y = x W + b for x [B x I], W [I x O], b [O].
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);
template <typename T>
void dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy, Tensor<T>* dx, Tensor<T>* dw,
                    Tensor<T>* db);

/// Valid 1-D convolution: x [B x L x D], filters [F x w x D], bias [F] -> [B x (L-w+1) x F].
template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Tensor<T>& filters, const Tensor<T>& bias);
template <typename T>
void conv1d_backward(const Tensor<T>& x, const Tensor<T>& filters, const Tensor<T>& dy, Tensor<T>* dx,
                     Tensor<T>* dfilters, Tensor<T>* dbias);

template <typename T>
struct PoolResult {
  Tensor<T> out;                   // [B x F]
  std::vector<std::size_t> argmax;  // B*F time indices, first maximum on ties
};

/// out[b,f] = max_t x[b,t,f] for x [B x T x F].
template <typename T>
PoolResult<T> max_pool_over_time(const Tensor<T>& x);
template <typename T>
void max_pool_backward(const Shape& x_shape, const std::vector<std::size_t>& argmax, const Tensor<T>& dy,
                       Tensor<T>& dx);

/// One LSTM direction. Gate blocks are ordered input, forget, candidate, output.
template <typename T>
struct LstmWeightsView {
  const Tensor<T>& wx;  // [D x 4H]
  const Tensor<T>& wh;  // [H x 4H]
  const Tensor<T>& b;   // [4H]

  std::size_t hidden() const { return b.size() / 4; }
};

template <typename T>
struct LstmCache {
  // Per example, per processed step: h_prev, c_prev, gates (i,f,g,o), c, tanh(c).
  std::vector<std::vector<T>> h_prev, c_prev, gates, c, tanh_c;
  std::vector<std::vector<std::size_t>> steps;  // time index of each processed step
};

/// Final hidden state [B x H]. Example b consumes its first lengths[b] steps,
/// in reverse when `reverse` is set; a zero length yields the zero state.
template <typename T>
Tensor<T> lstm_direction_forward(const Tensor<T>& x, const LstmWeightsView<T>& w,
                                 std::span<const std::size_t> lengths, bool reverse, LstmCache<T>* cache);
template <typename T>
void lstm_direction_backward(const Tensor<T>& x, const LstmWeightsView<T>& w, const LstmCache<T>& cache,
                             const Tensor<T>& dh, Tensor<T>* dx, Tensor<T>* dwx, Tensor<T>* dwh, Tensor<T>* db);

/// Forward final state, or [forward-final | backward-final] when `backward` is given.
template <typename T>
Tensor<T> lstm_forward(const Tensor<T>& x, const LstmWeightsView<T>& forward, const LstmWeightsView<T>* backward,
                       std::span<const std::size_t> lengths);

template <typename T>
T sigmoid(T z);

/// Row-wise softmax over the last dimension of a [B x K] tensor.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits);

/// Mean over the batch of -log p(target) for probabilities p of the positive
/// class, each term scaled by the target's class weight when given.
/// Throws DomainError unless every p lies in (0, 1).
template <typename T>
T binary_cross_entropy(std::span<const T> p, std::span<const int> targets, std::span<const double> class_weights = {});

/// Same for [B x K] distributions; rows must sum to 1 within 1e-6.
template <typename T>
T categorical_cross_entropy(const Tensor<T>& p, std::span<const int> targets,
                            std::span<const double> class_weights = {});

}  // namespace exist
