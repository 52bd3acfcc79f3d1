#include "exist/kernels.hpp"

#include <cmath>
#include <sstream>

namespace exist {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw ShapeError(std::string(op) + ": " + detail);
}

template <typename T>
void require_rank(const Tensor<T>& t, std::size_t rank, const char* op, const char* what) {
  require(t.rank() == rank, op,
          std::string(what) + " must have rank " + std::to_string(rank) + ", got " + shape_string(t.shape));
}

}  // namespace

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  require_rank(x, 2, "dense", "input");
  require_rank(w, 2, "dense", "weights");
  const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(1);
  require(w.dim(0) == in, "dense", "weights " + shape_string(w.shape) + " do not match input " + shape_string(x.shape));
  require(b.size() == out, "dense", "bias size does not match output width");
  Tensor<T> y({batch, out});
  for (std::size_t r = 0; r < batch; ++r) {
    T* yr = &y[r * out];
    for (std::size_t o = 0; o < out; ++o) yr[o] = b[o];
    for (std::size_t i = 0; i < in; ++i) {
      const T xi = x[r * in + i];
      const T* wi = &w[i * out];
      for (std::size_t o = 0; o < out; ++o) yr[o] += xi * wi[o];
    }
  }
  return y;
}

template <typename T>
void dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy, Tensor<T>* dx, Tensor<T>* dw,
                    Tensor<T>* db) {
  const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(1);
  for (std::size_t r = 0; r < batch; ++r) {
    const T* g = &dy[r * out];
    for (std::size_t i = 0; i < in; ++i) {
      const T* wi = &w[i * out];
      if (dx) {
        T acc = 0;
        for (std::size_t o = 0; o < out; ++o) acc += g[o] * wi[o];
        (*dx)[r * in + i] += acc;
      }
      if (dw) {
        const T xi = x[r * in + i];
        T* dwi = &(*dw)[i * out];
        for (std::size_t o = 0; o < out; ++o) dwi[o] += xi * g[o];
      }
    }
    if (db) {
      for (std::size_t o = 0; o < out; ++o) (*db)[o] += g[o];
    }
  }
}

template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Tensor<T>& filters, const Tensor<T>& bias) {
  require_rank(x, 3, "conv1d", "input");
  require_rank(filters, 3, "conv1d", "filters");
  const std::size_t batch = x.dim(0), len = x.dim(1), depth = x.dim(2);
  const std::size_t nf = filters.dim(0), width = filters.dim(1);
  require(filters.dim(2) == depth, "conv1d", "filter depth does not match input depth");
  require(bias.size() == nf, "conv1d", "bias size does not match filter count");
  require(width >= 1 && len >= width, "conv1d",
          "sequence length " + std::to_string(len) + " is shorter than filter width " + std::to_string(width));
  const std::size_t steps = len - width + 1, span_len = width * depth;
  Tensor<T> y({batch, steps, nf});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      // x[b, t:t+w, :] is contiguous, as is filters[f, :, :].
      const T* window = &x[(b * len + t) * depth];
      T* yt = &y[(b * steps + t) * nf];
      for (std::size_t f = 0; f < nf; ++f) {
        const T* k = &filters[f * span_len];
        T acc = bias[f];
        for (std::size_t j = 0; j < span_len; ++j) acc += window[j] * k[j];
        yt[f] = acc;
      }
    }
  }
  return y;
}

template <typename T>
void conv1d_backward(const Tensor<T>& x, const Tensor<T>& filters, const Tensor<T>& dy, Tensor<T>* dx,
                     Tensor<T>* dfilters, Tensor<T>* dbias) {
  const std::size_t batch = x.dim(0), len = x.dim(1), depth = x.dim(2);
  const std::size_t nf = filters.dim(0), width = filters.dim(1);
  const std::size_t steps = len - width + 1, span_len = width * depth;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      const T* window = &x[(b * len + t) * depth];
      const T* g = &dy[(b * steps + t) * nf];
      for (std::size_t f = 0; f < nf; ++f) {
        const T gf = g[f];
        if (gf == T(0)) continue;
        if (dbias) (*dbias)[f] += gf;
        if (dfilters) {
          T* dk = &(*dfilters)[f * span_len];
          for (std::size_t j = 0; j < span_len; ++j) dk[j] += gf * window[j];
        }
        if (dx) {
          const T* k = &filters[f * span_len];
          T* dwin = &(*dx)[(b * len + t) * depth];
          for (std::size_t j = 0; j < span_len; ++j) dwin[j] += gf * k[j];
        }
      }
    }
  }
}

template <typename T>
PoolResult<T> max_pool_over_time(const Tensor<T>& x) {
  require_rank(x, 3, "max_pool_over_time", "input");
  const std::size_t batch = x.dim(0), steps = x.dim(1), nf = x.dim(2);
  require(steps >= 1, "max_pool_over_time", "needs at least one time step");
  PoolResult<T> r{Tensor<T>({batch, nf}), std::vector<std::size_t>(batch * nf, 0)};
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t f = 0; f < nf; ++f) {
      std::size_t best = 0;
      T best_v = x[(b * steps) * nf + f];
      for (std::size_t t = 1; t < steps; ++t) {
        const T v = x[(b * steps + t) * nf + f];
        if (v > best_v) {
          best_v = v;
          best = t;
        }
      }
      r.out[b * nf + f] = best_v;
      r.argmax[b * nf + f] = best;
    }
  }
  return r;
}

template <typename T>
void max_pool_backward(const Shape& x_shape, const std::vector<std::size_t>& argmax, const Tensor<T>& dy,
                       Tensor<T>& dx) {
  const std::size_t batch = x_shape[0], steps = x_shape[1], nf = x_shape[2];
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t f = 0; f < nf; ++f) {
      dx[(b * steps + argmax[b * nf + f]) * nf + f] += dy[b * nf + f];
    }
  }
}

template <typename T>
T sigmoid(T z) {
  if (z >= 0) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

template <typename T>
Tensor<T> lstm_direction_forward(const Tensor<T>& x, const LstmWeightsView<T>& w,
                                 std::span<const std::size_t> lengths, bool reverse, LstmCache<T>* cache) {
  require_rank(x, 3, "lstm", "input");
  const std::size_t batch = x.dim(0), len = x.dim(1), depth = x.dim(2);
  const std::size_t hidden = w.hidden(), g4 = 4 * hidden;
  require(w.b.size() == g4 && hidden > 0, "lstm", "bias must have size 4H");
  require(w.wx.rank() == 2 && w.wx.dim(0) == depth && w.wx.dim(1) == g4, "lstm",
          "input kernel must be [D x 4H], got " + shape_string(w.wx.shape));
  require(w.wh.rank() == 2 && w.wh.dim(0) == hidden && w.wh.dim(1) == g4, "lstm",
          "recurrent kernel must be [H x 4H], got " + shape_string(w.wh.shape));
  require(lengths.size() == batch, "lstm", "one length per example required");

  if (cache) {
    *cache = LstmCache<T>{};
    cache->h_prev.resize(batch);
    cache->c_prev.resize(batch);
    cache->gates.resize(batch);
    cache->c.resize(batch);
    cache->tanh_c.resize(batch);
    cache->steps.resize(batch);
  }

  Tensor<T> out({batch, hidden});
  std::vector<T> h(hidden), c(hidden), z(g4);
  for (std::size_t b = 0; b < batch; ++b) {
    require(lengths[b] <= len, "lstm", "length exceeds sequence length");
    std::fill(h.begin(), h.end(), T(0));
    std::fill(c.begin(), c.end(), T(0));
    for (std::size_t s = 0; s < lengths[b]; ++s) {
      const std::size_t t = reverse ? lengths[b] - 1 - s : s;
      const T* xt = &x[(b * len + t) * depth];
      for (std::size_t k = 0; k < g4; ++k) z[k] = w.b[k];
      for (std::size_t d = 0; d < depth; ++d) {
        const T xv = xt[d];
        const T* row = &w.wx[d * g4];
        for (std::size_t k = 0; k < g4; ++k) z[k] += xv * row[k];
      }
      for (std::size_t j = 0; j < hidden; ++j) {
        const T hv = h[j];
        const T* row = &w.wh[j * g4];
        for (std::size_t k = 0; k < g4; ++k) z[k] += hv * row[k];
      }
      if (cache) {
        cache->h_prev[b].insert(cache->h_prev[b].end(), h.begin(), h.end());
        cache->c_prev[b].insert(cache->c_prev[b].end(), c.begin(), c.end());
        cache->steps[b].push_back(t);
      }
      for (std::size_t j = 0; j < hidden; ++j) {
        const T ig = sigmoid(z[j]);
        const T fg = sigmoid(z[hidden + j]);
        const T gg = std::tanh(z[2 * hidden + j]);
        const T og = sigmoid(z[3 * hidden + j]);
        z[j] = ig;
        z[hidden + j] = fg;
        z[2 * hidden + j] = gg;
        z[3 * hidden + j] = og;
        c[j] = fg * c[j] + ig * gg;
      }
      for (std::size_t j = 0; j < hidden; ++j) h[j] = z[3 * hidden + j] * std::tanh(c[j]);
      if (cache) {
        cache->gates[b].insert(cache->gates[b].end(), z.begin(), z.end());
        cache->c[b].insert(cache->c[b].end(), c.begin(), c.end());
        for (std::size_t j = 0; j < hidden; ++j) cache->tanh_c[b].push_back(std::tanh(c[j]));
      }
    }
    std::copy(h.begin(), h.end(), &out[b * hidden]);
  }
  return out;
}

template <typename T>
void lstm_direction_backward(const Tensor<T>& x, const LstmWeightsView<T>& w, const LstmCache<T>& cache,
                             const Tensor<T>& dh_out, Tensor<T>* dx, Tensor<T>* dwx, Tensor<T>* dwh, Tensor<T>* db) {
  const std::size_t batch = x.dim(0), len = x.dim(1), depth = x.dim(2);
  const std::size_t hidden = w.hidden(), g4 = 4 * hidden;
  std::vector<T> dh(hidden), dc(hidden), dz(g4), dh_prev(hidden);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t n_steps = cache.steps[b].size();
    std::copy(&dh_out[b * hidden], &dh_out[b * hidden] + hidden, dh.begin());
    std::fill(dc.begin(), dc.end(), T(0));
    for (std::size_t s = n_steps; s-- > 0;) {
      const std::size_t t = cache.steps[b][s];
      const T* gates = &cache.gates[b][s * g4];
      const T* tc = &cache.tanh_c[b][s * hidden];
      const T* cp = &cache.c_prev[b][s * hidden];
      const T* hp = &cache.h_prev[b][s * hidden];
      for (std::size_t j = 0; j < hidden; ++j) {
        const T ig = gates[j], fg = gates[hidden + j], gg = gates[2 * hidden + j], og = gates[3 * hidden + j];
        const T d_o = dh[j] * tc[j];
        dc[j] += dh[j] * og * (T(1) - tc[j] * tc[j]);
        dz[j] = dc[j] * gg * ig * (T(1) - ig);
        dz[hidden + j] = dc[j] * cp[j] * fg * (T(1) - fg);
        dz[2 * hidden + j] = dc[j] * ig * (T(1) - gg * gg);
        dz[3 * hidden + j] = d_o * og * (T(1) - og);
        dc[j] *= fg;
      }
      const T* xt = &x[(b * len + t) * depth];
      if (db) {
        for (std::size_t k = 0; k < g4; ++k) (*db)[k] += dz[k];
      }
      for (std::size_t d = 0; d < depth; ++d) {
        const T* row = &w.wx[d * g4];
        if (dwx) {
          T* drow = &(*dwx)[d * g4];
          const T xv = xt[d];
          for (std::size_t k = 0; k < g4; ++k) drow[k] += xv * dz[k];
        }
        if (dx) {
          T acc = 0;
          for (std::size_t k = 0; k < g4; ++k) acc += row[k] * dz[k];
          (*dx)[(b * len + t) * depth + d] += acc;
        }
      }
      for (std::size_t j = 0; j < hidden; ++j) {
        const T* row = &w.wh[j * g4];
        if (dwh) {
          T* drow = &(*dwh)[j * g4];
          for (std::size_t k = 0; k < g4; ++k) drow[k] += hp[j] * dz[k];
        }
        T acc = 0;
        for (std::size_t k = 0; k < g4; ++k) acc += row[k] * dz[k];
        dh_prev[j] = acc;
      }
      std::swap(dh, dh_prev);
    }
  }
}

template <typename T>
Tensor<T> lstm_forward(const Tensor<T>& x, const LstmWeightsView<T>& forward, const LstmWeightsView<T>* backward,
                       std::span<const std::size_t> lengths) {
  auto fwd = lstm_direction_forward<T>(x, forward, lengths, false, nullptr);
  if (!backward) return fwd;
  auto bwd = lstm_direction_forward<T>(x, *backward, lengths, true, nullptr);
  const std::size_t batch = fwd.dim(0), h1 = fwd.dim(1), h2 = bwd.dim(1);
  Tensor<T> out({batch, h1 + h2});
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy(&fwd[b * h1], &fwd[b * h1] + h1, &out[b * (h1 + h2)]);
    std::copy(&bwd[b * h2], &bwd[b * h2] + h2, &out[b * (h1 + h2) + h1]);
  }
  return out;
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
  require_rank(logits, 2, "softmax", "logits");
  const std::size_t batch = logits.dim(0), k = logits.dim(1);
  Tensor<T> p(logits.shape);
  for (std::size_t b = 0; b < batch; ++b) {
    const T* z = &logits[b * k];
    T m = z[0];
    for (std::size_t i = 1; i < k; ++i) m = std::max(m, z[i]);
    T sum = 0;
    for (std::size_t i = 0; i < k; ++i) sum += (p[b * k + i] = std::exp(z[i] - m));
    for (std::size_t i = 0; i < k; ++i) p[b * k + i] /= sum;
  }
  return p;
}

namespace {

double weight_of(std::span<const double> weights, int target) {
  if (weights.empty()) return 1.0;
  if (target < 0 || static_cast<std::size_t>(target) >= weights.size()) {
    throw DomainError("no class weight for target " + std::to_string(target));
  }
  return weights[static_cast<std::size_t>(target)];
}

}  // namespace

template <typename T>
T binary_cross_entropy(std::span<const T> p, std::span<const int> targets, std::span<const double> class_weights) {
  if (p.size() != targets.size() || p.empty()) throw SizeError("binary_cross_entropy: batch size mismatch");
  T total = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > T(0) && p[i] < T(1))) throw DomainError("binary probability outside (0, 1)");
    if (targets[i] != 0 && targets[i] != 1) throw DomainError("binary target must be 0 or 1");
    const T pt = targets[i] == 1 ? p[i] : T(1) - p[i];
    total += static_cast<T>(weight_of(class_weights, targets[i])) * -std::log(pt);
  }
  return total / static_cast<T>(p.size());
}

template <typename T>
T categorical_cross_entropy(const Tensor<T>& p, std::span<const int> targets, std::span<const double> class_weights) {
  require_rank(p, 2, "categorical_cross_entropy", "probabilities");
  const std::size_t batch = p.dim(0), k = p.dim(1);
  if (batch != targets.size() || batch == 0) throw SizeError("categorical_cross_entropy: batch size mismatch");
  T total = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    T sum = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const T v = p[b * k + i];
      if (!(v >= T(0) && v <= T(1))) throw DomainError("probability outside [0, 1]");
      sum += v;
    }
    if (std::abs(static_cast<double>(sum) - 1.0) > 1e-6) throw DomainError("probabilities do not sum to 1");
    const int t = targets[b];
    if (t < 0 || static_cast<std::size_t>(t) >= k) throw DomainError("target outside label range");
    const T pt = p[b * k + static_cast<std::size_t>(t)];
    if (!(pt > T(0))) throw DomainError("zero probability on target class");
    total += static_cast<T>(weight_of(class_weights, t)) * -std::log(pt);
  }
  return total / static_cast<T>(batch);
}

#define EXIST_INSTANTIATE_KERNELS(T)                                                                              \
  template Tensor<T> dense_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                        \
  template void dense_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>*, Tensor<T>*,     \
                               Tensor<T>*);                                                                       \
  template Tensor<T> conv1d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                       \
  template void conv1d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>*, Tensor<T>*,    \
                                Tensor<T>*);                                                                      \
  template PoolResult<T> max_pool_over_time(const Tensor<T>&);                                                    \
  template void max_pool_backward(const Shape&, const std::vector<std::size_t>&, const Tensor<T>&, Tensor<T>&);  \
  template T sigmoid(T);                                                                                          \
  template Tensor<T> lstm_direction_forward(const Tensor<T>&, const LstmWeightsView<T>&,                         \
                                            std::span<const std::size_t>, bool, LstmCache<T>*);                  \
  template void lstm_direction_backward(const Tensor<T>&, const LstmWeightsView<T>&, const LstmCache<T>&,        \
                                        const Tensor<T>&, Tensor<T>*, Tensor<T>*, Tensor<T>*, Tensor<T>*);       \
  template Tensor<T> lstm_forward(const Tensor<T>&, const LstmWeightsView<T>&, const LstmWeightsView<T>*,        \
                                  std::span<const std::size_t>);                                                 \
  template Tensor<T> softmax_rows(const Tensor<T>&);                                                              \
  template T binary_cross_entropy(std::span<const T>, std::span<const int>, std::span<const double>);            \
  template T categorical_cross_entropy(const Tensor<T>&, std::span<const int>, std::span<const double>);

EXIST_INSTANTIATE_KERNELS(float)
EXIST_INSTANTIATE_KERNELS(double)

#undef EXIST_INSTANTIATE_KERNELS

}  // namespace exist
