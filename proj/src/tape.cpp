#include "exist/tape.hpp"

#include <cmath>
#include <memory>

namespace exist {

template <typename T>
void Tape<T>::backward(Var loss) {
  if (value(loss).size() != 1) throw ShapeError("backward target must be a scalar");
  for (auto& n : nodes_) n.grad = Tensor<T>{};
  grad_mut(loss)[0] = T(1);
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.backward || n.grad.shape != n.value.shape) continue;
    // Callbacks only touch grads of earlier nodes; nodes_ does not reallocate here.
    n.backward(*this, n.grad);
  }
}

namespace nn {

template <typename T>
Var embedding(Tape<T>& tape, Parameter<T>& table, std::span<const std::int32_t> ids, std::size_t batch,
              std::size_t len) {
  if (table.value.rank() != 2) throw ShapeError("embedding table must be 2-D");
  if (ids.size() != batch * len) throw ShapeError("embedding: ids do not match batch x length");
  const std::size_t rows = table.value.dim(0), dim = table.value.dim(1);
  Tensor<T> out({batch, len, dim});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto id = static_cast<std::size_t>(ids[i]);
    if (ids[i] < 0 || id >= rows) throw ShapeError("embedding: id " + std::to_string(ids[i]) + " out of range");
    if (id == 0) continue;  // PAD reads as zeros whatever the table holds
    std::copy(&table.value[id * dim], &table.value[id * dim] + dim, &out[i * dim]);
  }
  std::vector<std::int32_t> saved(ids.begin(), ids.end());
  return tape.push(std::move(out), [&table, saved = std::move(saved), dim](Tape<T>&, const Tensor<T>& g) {
    if (table.frozen) return;
    for (std::size_t i = 0; i < saved.size(); ++i) {
      const auto id = static_cast<std::size_t>(saved[i]);
      if (id == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) table.grad[id * dim + d] += g[i * dim + d];
    }
  });
}

template <typename T>
Var dense(Tape<T>& tape, Var x, Parameter<T>& w, Parameter<T>& b) {
  auto y = dense_forward(tape.value(x), w.value, b.value);
  return tape.push(std::move(y), [x, &w, &b](Tape<T>& t, const Tensor<T>& g) {
    dense_backward(t.value(x), w.value, g, &t.grad_mut(x), w.frozen ? nullptr : &w.grad,
                   b.frozen ? nullptr : &b.grad);
  });
}

template <typename T>
Var conv1d(Tape<T>& tape, Var x, Parameter<T>& filters, Parameter<T>& bias) {
  auto y = conv1d_forward(tape.value(x), filters.value, bias.value);
  return tape.push(std::move(y), [x, &filters, &bias](Tape<T>& t, const Tensor<T>& g) {
    conv1d_backward(t.value(x), filters.value, g, &t.grad_mut(x), filters.frozen ? nullptr : &filters.grad,
                    bias.frozen ? nullptr : &bias.grad);
  });
}

template <typename T>
Var max_pool_time(Tape<T>& tape, Var x) {
  auto r = max_pool_over_time(tape.value(x));
  return tape.push(std::move(r.out), [x, argmax = std::move(r.argmax)](Tape<T>& t, const Tensor<T>& g) {
    max_pool_backward(t.value(x).shape, argmax, g, t.grad_mut(x));
  });
}

template <typename T>
Var lstm(Tape<T>& tape, Var x, LstmLayer<T>& forward, LstmLayer<T>* backward, std::span<const std::size_t> lengths) {
  const auto& xv = tape.value(x);
  auto fwd_cache = std::make_shared<LstmCache<T>>();
  auto out = lstm_direction_forward(xv, forward.view(), lengths, false, fwd_cache.get());
  std::shared_ptr<LstmCache<T>> bwd_cache;
  if (backward) {
    bwd_cache = std::make_shared<LstmCache<T>>();
    auto back = lstm_direction_forward(xv, backward->view(), lengths, true, bwd_cache.get());
    const std::size_t batch = out.dim(0), h = out.dim(1), hb = back.dim(1);
    Tensor<T> both({batch, h + hb});
    for (std::size_t b = 0; b < batch; ++b) {
      std::copy(&out[b * h], &out[b * h] + h, &both[b * (h + hb)]);
      std::copy(&back[b * hb], &back[b * hb] + hb, &both[b * (h + hb) + h]);
    }
    out = std::move(both);
  }
  return tape.push(std::move(out), [x, &forward, backward, fwd_cache, bwd_cache](Tape<T>& t, const Tensor<T>& g) {
    const auto& xv = t.value(x);
    auto& dx = t.grad_mut(x);
    const std::size_t batch = g.dim(0), h = forward.b.value.size() / 4;
    const std::size_t width = g.dim(1);
    auto run = [&](LstmLayer<T>& layer, const LstmCache<T>& cache, std::size_t offset, std::size_t hidden) {
      Tensor<T> dh({batch, hidden});
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < hidden; ++j) dh[b * hidden + j] = g[b * width + offset + j];
      }
      lstm_direction_backward(xv, layer.view(), cache, dh, &dx, layer.wx.frozen ? nullptr : &layer.wx.grad,
                              layer.wh.frozen ? nullptr : &layer.wh.grad, layer.b.frozen ? nullptr : &layer.b.grad);
    };
    run(forward, *fwd_cache, 0, h);
    if (backward) run(*backward, *bwd_cache, h, backward->b.value.size() / 4);
  });
}

template <typename T>
Var masked_mean(Tape<T>& tape, Var x, std::span<const std::size_t> lengths) {
  const auto& xv = tape.value(x);
  if (xv.rank() != 3) throw ShapeError("masked_mean expects [B x L x D]");
  const std::size_t batch = xv.dim(0), len = xv.dim(1), dim = xv.dim(2);
  if (lengths.size() != batch) throw ShapeError("masked_mean: one length per example required");
  Tensor<T> out({batch, dim});
  for (std::size_t b = 0; b < batch; ++b) {
    if (lengths[b] > len) throw ShapeError("masked_mean: length exceeds sequence length");
    if (lengths[b] == 0) continue;
    for (std::size_t t = 0; t < lengths[b]; ++t) {
      for (std::size_t d = 0; d < dim; ++d) out[b * dim + d] += xv[(b * len + t) * dim + d];
    }
    const T inv = T(1) / static_cast<T>(lengths[b]);
    for (std::size_t d = 0; d < dim; ++d) out[b * dim + d] *= inv;
  }
  std::vector<std::size_t> lens(lengths.begin(), lengths.end());
  return tape.push(std::move(out), [x, lens = std::move(lens), len, dim](Tape<T>& t, const Tensor<T>& g) {
    auto& dx = t.grad_mut(x);
    for (std::size_t b = 0; b < lens.size(); ++b) {
      if (lens[b] == 0) continue;
      const T inv = T(1) / static_cast<T>(lens[b]);
      for (std::size_t s = 0; s < lens[b]; ++s) {
        for (std::size_t d = 0; d < dim; ++d) dx[(b * len + s) * dim + d] += g[b * dim + d] * inv;
      }
    }
  });
}

template <typename T>
Var concat(Tape<T>& tape, std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat of nothing");
  const std::size_t batch = tape.value(parts[0]).dim(0);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (Var p : parts) {
    const auto& v = tape.value(p);
    if (v.rank() != 2 || v.dim(0) != batch) throw ShapeError("concat expects [B x n] parts with equal B");
    widths.push_back(v.dim(1));
    total += v.dim(1);
  }
  Tensor<T> out({batch, total});
  std::size_t offset = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& v = tape.value(parts[i]);
    for (std::size_t b = 0; b < batch; ++b) {
      std::copy(&v[b * widths[i]], &v[b * widths[i]] + widths[i], &out[b * total + offset]);
    }
    offset += widths[i];
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return tape.push(std::move(out), [saved = std::move(saved), widths = std::move(widths), total, batch](
                                       Tape<T>& t, const Tensor<T>& g) {
    std::size_t offset = 0;
    for (std::size_t i = 0; i < saved.size(); ++i) {
      auto& dx = t.grad_mut(saved[i]);
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < widths[i]; ++j) dx[b * widths[i] + j] += g[b * total + offset + j];
      }
      offset += widths[i];
    }
  });
}

template <typename T>
Var relu(Tape<T>& tape, Var x) {
  Tensor<T> out = tape.value(x);
  for (auto& v : out.data) v = v > T(0) ? v : T(0);
  return tape.push(std::move(out), [x](Tape<T>& t, const Tensor<T>& g) {
    const auto& xv = t.value(x);
    auto& dx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > T(0)) dx[i] += g[i];
    }
  });
}

template <typename T>
Var dropout(Tape<T>& tape, Var x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) throw DomainError("dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0) {
    Tensor<T> out = tape.value(x);
    return tape.push(std::move(out), [x](Tape<T>& t, const Tensor<T>& g) {
      auto& dx = t.grad_mut(x);
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
    });
  }
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  const auto& xv = tape.value(x);
  std::vector<T> mask(xv.size());
  Tensor<T> out(xv.shape);
  for (std::size_t i = 0; i < xv.size(); ++i) {
    mask[i] = rng.uniform_real() < rate ? T(0) : scale;
    out[i] = xv[i] * mask[i];
  }
  return tape.push(std::move(out), [x, mask = std::move(mask)](Tape<T>& t, const Tensor<T>& g) {
    auto& dx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * mask[i];
  });
}

template <typename T>
Var sigmoid(Tape<T>& tape, Var x) {
  Tensor<T> out = tape.value(x);
  for (auto& v : out.data) v = exist::sigmoid(v);
  const Var self{tape.size()};
  return tape.push(std::move(out), [x, self](Tape<T>& t, const Tensor<T>& g) {
    const auto& p = t.value(self);
    auto& dx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * p[i] * (T(1) - p[i]);
  });
}

template <typename T>
Var softmax(Tape<T>& tape, Var x) {
  const Var self{tape.size()};
  return tape.push(softmax_rows(tape.value(x)), [x, self](Tape<T>& t, const Tensor<T>& g) {
    const auto& p = t.value(self);
    auto& dx = t.grad_mut(x);
    const std::size_t batch = p.dim(0), k = p.dim(1);
    for (std::size_t b = 0; b < batch; ++b) {
      T dot = 0;
      for (std::size_t i = 0; i < k; ++i) dot += g[b * k + i] * p[b * k + i];
      for (std::size_t i = 0; i < k; ++i) dx[b * k + i] += p[b * k + i] * (g[b * k + i] - dot);
    }
  });
}

template <typename T>
Var cross_entropy_with_logits(Tape<T>& tape, Var logits, std::span<const int> targets,
                              std::span<const double> class_weights) {
  const auto& z = tape.value(logits);
  if (z.rank() != 2) throw ShapeError("cross_entropy expects [B x K] logits");
  const std::size_t batch = z.dim(0), k = z.dim(1);
  if (targets.size() != batch || batch == 0) throw SizeError("cross_entropy: batch size mismatch");
  const std::size_t n_classes = k == 1 ? 2 : k;
  std::vector<T> weights(batch, T(1));
  for (std::size_t b = 0; b < batch; ++b) {
    if (targets[b] < 0 || static_cast<std::size_t>(targets[b]) >= n_classes) {
      throw DomainError("target outside label range");
    }
    if (!class_weights.empty()) weights[b] = static_cast<T>(class_weights[static_cast<std::size_t>(targets[b])]);
  }
  // dL/dz = w * (p - onehot) / B, with p the sigmoid or softmax output.
  Tensor<T> dz(z.shape);
  T total = 0;
  if (k == 1) {
    for (std::size_t b = 0; b < batch; ++b) {
      const T v = z[b];
      // -log sigmoid(v) = softplus(-v); -log(1 - sigmoid(v)) = softplus(v).
      const T s = targets[b] == 1 ? -v : v;
      const T softplus = s > T(0) ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
      total += weights[b] * softplus;
      dz[b] = weights[b] * (exist::sigmoid(v) - static_cast<T>(targets[b]));
    }
  } else {
    const auto p = softmax_rows(z);
    for (std::size_t b = 0; b < batch; ++b) {
      const T* zr = &z[b * k];
      T m = zr[0];
      for (std::size_t i = 1; i < k; ++i) m = std::max(m, zr[i]);
      T sum = 0;
      for (std::size_t i = 0; i < k; ++i) sum += std::exp(zr[i] - m);
      const auto t = static_cast<std::size_t>(targets[b]);
      total += weights[b] * (m + std::log(sum) - zr[t]);
      for (std::size_t i = 0; i < k; ++i) {
        dz[b * k + i] = weights[b] * (p[b * k + i] - (i == t ? T(1) : T(0)));
      }
    }
  }
  const T inv_batch = T(1) / static_cast<T>(batch);
  for (auto& v : dz.data) v *= inv_batch;
  Tensor<T> out({1}, std::vector<T>{total * inv_batch});
  return tape.push(std::move(out), [logits, dz = std::move(dz)](Tape<T>& t, const Tensor<T>& g) {
    auto& dx = t.grad_mut(logits);
    for (std::size_t i = 0; i < dz.size(); ++i) dx[i] += g[0] * dz[i];
  });
}

template <typename T>
Var sum(Tape<T>& tape, Var x) {
  T total = 0;
  for (T v : tape.value(x).data) total += v;
  return tape.push(Tensor<T>({1}, std::vector<T>{total}), [x](Tape<T>& t, const Tensor<T>& g) {
    auto& dx = t.grad_mut(x);
    for (auto& v : dx.data) v += g[0];
  });
}

}  // namespace nn

#define EXIST_INSTANTIATE_TAPE(T)                                                                                  \
  template class Tape<T>;                                                                                          \
  template Var nn::embedding(Tape<T>&, Parameter<T>&, std::span<const std::int32_t>, std::size_t, std::size_t);    \
  template Var nn::dense(Tape<T>&, Var, Parameter<T>&, Parameter<T>&);                                             \
  template Var nn::conv1d(Tape<T>&, Var, Parameter<T>&, Parameter<T>&);                                            \
  template Var nn::max_pool_time(Tape<T>&, Var);                                                                   \
  template Var nn::lstm(Tape<T>&, Var, LstmLayer<T>&, LstmLayer<T>*, std::span<const std::size_t>);                \
  template Var nn::masked_mean(Tape<T>&, Var, std::span<const std::size_t>);                                       \
  template Var nn::concat(Tape<T>&, std::span<const Var>);                                                         \
  template Var nn::relu(Tape<T>&, Var);                                                                            \
  template Var nn::dropout(Tape<T>&, Var, double, Rng&, bool);                                                     \
  template Var nn::sigmoid(Tape<T>&, Var);                                                                         \
  template Var nn::softmax(Tape<T>&, Var);                                                                         \
  template Var nn::cross_entropy_with_logits(Tape<T>&, Var, std::span<const int>, std::span<const double>);        \
  template Var nn::sum(Tape<T>&, Var);

EXIST_INSTANTIATE_TAPE(float)
EXIST_INSTANTIATE_TAPE(double)

#undef EXIST_INSTANTIATE_TAPE

}  // namespace exist
