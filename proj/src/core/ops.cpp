// Copyright 2026 The NoduleForge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "noduleforge/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "noduleforge/core/error.hpp"

namespace noduleforge {
namespace {

struct ChannelLayout {
  std::size_t n, c, inner;
};

ChannelLayout channel_layout(const Shape& s, const char* op) {
  if (s.size() == 4) return {1, s[0], s[1] * s[2] * s[3]};
  if (s.size() == 5) return {s[0], s[1], s[2] * s[3] * s[4]};
  fail(ErrorKind::kShapeMismatch, std::string(op) + ": expected rank 4 or 5, got " + shape_string(s));
}

std::size_t channel_axis(const Shape& s) { return s.size() == 5 ? 1 : 0; }

template <typename T>
void accumulate(Array<T>& dst, const Array<T>& src) {
  T* d = dst.data();
  const T* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

template <typename T>
detail::Node<T>* parent_needing_grad(detail::Node<T>& self, std::size_t i) {
  auto* p = self.parents[i].get();
  return p->requires_grad ? p : nullptr;
}

/// 1-D linear interpolation table: out[o] = w0 * in[i0] + w1 * in[i1].
struct InterpEntry {
  std::size_t i0, i1;
  double w0, w1;
};

std::vector<InterpEntry> enlarge_table(std::size_t n) {
  std::vector<InterpEntry> table(2 * n);
  for (std::size_t o = 0; o < 2 * n; ++o) {
    const std::size_t i0 = o / 2;
    const std::size_t i1 = std::min(i0 + 1, n - 1);
    const double frac = (o % 2) ? 0.5 : 0.0;
    table[o] = {i0, i1, 1.0 - frac, frac};
  }
  return table;
}

/// Applies a 1-D table along spatial axis `axis` (0=D,1=H,2=W) of every
/// (n, c) slab. `adjoint` scatters instead of gathering.
template <typename T>
Array<T> interp_axis(const Array<T>& in, std::size_t axis, const std::vector<InterpEntry>& table,
                     std::size_t in_extent, bool adjoint) {
  const Shape& s = in.shape();
  const std::size_t base = s.size() - 3;
  Shape out_shape = s;
  const std::size_t out_extent = adjoint ? in_extent : table.size();
  out_shape[base + axis] = out_extent;
  Array<T> out(out_shape, T{0});
  std::size_t outer = 1;
  for (std::size_t i = 0; i < base + axis; ++i) outer *= s[i];
  std::size_t inner = 1;
  for (std::size_t i = base + axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t src_extent = s[base + axis];
  for (std::size_t o = 0; o < outer; ++o) {
    const T* src = in.data() + o * src_extent * inner;
    T* dst = out.data() + o * out_extent * inner;
    for (std::size_t k = 0; k < table.size(); ++k) {
      const auto& e = table[k];
      const T w0 = static_cast<T>(e.w0);
      const T w1 = static_cast<T>(e.w1);
      if (!adjoint) {
        const T* a = src + e.i0 * inner;
        const T* b = src + e.i1 * inner;
        T* d = dst + k * inner;
        for (std::size_t j = 0; j < inner; ++j) d[j] = w0 * a[j] + w1 * b[j];
      } else {
        const T* g = src + k * inner;
        T* a = dst + e.i0 * inner;
        T* b = dst + e.i1 * inner;
        for (std::size_t j = 0; j < inner; ++j) {
          a[j] += w0 * g[j];
          b[j] += w1 * g[j];
        }
      }
    }
  }
  return out;
}

template <typename T>
Array<T> enlarge_array(const Array<T>& x) {
  const Shape& s = x.shape();
  require(s.size() >= 3, ErrorKind::kShapeMismatch, "enlarge2x: rank must be at least 3");
  const std::size_t base = s.size() - 3;
  Array<T> cur = x;
  for (std::size_t a = 0; a < 3; ++a) {
    const std::size_t n = s[base + a];
    require(n > 0, ErrorKind::kShapeMismatch, "enlarge2x: empty axis");
    cur = interp_axis(cur, a, enlarge_table(n), n, false);
  }
  return cur;
}

}  // namespace

namespace ops {

template <typename T>
Tensor<T> conv3d(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>* bias,
                 const ConvSpec& spec) {
  Array<T> out = conv3d_forward(input.array(), weights.array(), bias ? &bias->array() : nullptr, spec);
  std::vector<Tensor<T>> parents{input, weights};
  if (bias) parents.push_back(*bias);
  const bool has_bias = bias != nullptr;
  return Tensor<T>::from_op(std::move(out), std::move(parents), [spec, has_bias](detail::Node<T>& self) {
    auto* x = self.parents[0].get();
    auto* w = self.parents[1].get();
    ConvGrads<T> g = conv3d_backward(self.grad, x->value, w->value, spec, x->requires_grad);
    if (x->requires_grad) accumulate(x->grad_buffer(), g.input);
    if (w->requires_grad) accumulate(w->grad_buffer(), g.weights);
    if (has_bias) {
      if (auto* b = parent_needing_grad(self, 2)) accumulate(b->grad_buffer(), g.bias);
    }
  });
}

template <typename T>
Tensor<T> conv_transpose3d(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>* bias,
                           const ConvSpec& spec) {
  Array<T> out =
      conv_transpose3d_forward(input.array(), weights.array(), bias ? &bias->array() : nullptr, spec);
  std::vector<Tensor<T>> parents{input, weights};
  if (bias) parents.push_back(*bias);
  const bool has_bias = bias != nullptr;
  return Tensor<T>::from_op(std::move(out), std::move(parents), [spec, has_bias](detail::Node<T>& self) {
    auto* x = self.parents[0].get();
    auto* w = self.parents[1].get();
    ConvGrads<T> g = conv_transpose3d_backward(self.grad, x->value, w->value, spec, x->requires_grad);
    if (x->requires_grad) accumulate(x->grad_buffer(), g.input);
    if (w->requires_grad) accumulate(w->grad_buffer(), g.weights);
    if (has_bias) {
      if (auto* b = parent_needing_grad(self, 2)) accumulate(b->grad_buffer(), g.bias);
    }
  });
}

template <typename T>
PoolResult<T> maxpool3d(const Tensor<T>& input) {
  const Shape& s = input.shape();
  const ChannelLayout lay = channel_layout(s, "maxpool3d");
  const std::size_t base = s.size() - 3;
  const std::size_t d = s[base], h = s[base + 1], w = s[base + 2];
  const std::size_t od = (d + 1) / 2, oh = (h + 1) / 2, ow = (w + 1) / 2;
  Shape out_shape = s;
  out_shape[base] = od;
  out_shape[base + 1] = oh;
  out_shape[base + 2] = ow;
  Array<T> out(out_shape);
  std::vector<std::size_t> argmax(out.size());
  const T* x = input.array().data();
  std::size_t k = 0;
  for (std::size_t slab = 0; slab < lay.n * lay.c; ++slab) {
    const std::size_t off = slab * lay.inner;
    for (std::size_t z = 0; z < od; ++z)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t xx = 0; xx < ow; ++xx, ++k) {
          T best = -std::numeric_limits<T>::infinity();
          std::size_t best_i = 0;
          bool first = true;
          for (std::size_t dz = 0; dz < 2; ++dz) {
            const std::size_t zz = 2 * z + dz;
            if (zz >= d) continue;
            for (std::size_t dy = 0; dy < 2; ++dy) {
              const std::size_t yy = 2 * y + dy;
              if (yy >= h) continue;
              for (std::size_t dx = 0; dx < 2; ++dx) {
                const std::size_t x2 = 2 * xx + dx;
                if (x2 >= w) continue;
                const std::size_t idx = off + (zz * h + yy) * w + x2;
                if (first || x[idx] > best) {
                  best = x[idx];
                  best_i = idx;
                  first = false;
                }
              }
            }
          }
          out[k] = best;
          argmax[k] = best_i;
        }
  }
  PoolResult<T> result;
  result.argmax = argmax;
  result.output = Tensor<T>::from_op(std::move(out), {input}, [argmax = std::move(argmax)](detail::Node<T>& self) {
    auto* x = self.parents[0].get();
    Array<T>& gx = x->grad_buffer();
    for (std::size_t i = 0; i < argmax.size(); ++i) gx[argmax[i]] += self.grad[i];
  });
  return result;
}

template <typename T>
Tensor<T> batchnorm3d(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                      Tensor<T>& running_mean, Tensor<T>& running_var, Mode mode) {
  const ChannelLayout lay = channel_layout(input.shape(), "batchnorm3d");
  require(gamma.size() == lay.c && beta.size() == lay.c && running_mean.size() == lay.c &&
              running_var.size() == lay.c,
          ErrorKind::kShapeMismatch,
          "batchnorm3d: per-channel parameters must have " + std::to_string(lay.c) + " entries");
  const std::size_t m = lay.n * lay.inner;
  const T eps = static_cast<T>(kBatchNormEpsilon);
  std::vector<T> mean(lay.c), inv_std(lay.c);
  const T* x = input.array().data();

  if (mode == Mode::kTrain) {
    for (std::size_t c = 0; c < lay.c; ++c) {
      double sum = 0;
      for (std::size_t n = 0; n < lay.n; ++n) {
        const T* p = x + (n * lay.c + c) * lay.inner;
        for (std::size_t i = 0; i < lay.inner; ++i) sum += p[i];
      }
      const double mu = sum / static_cast<double>(m);
      double sq = 0;
      for (std::size_t n = 0; n < lay.n; ++n) {
        const T* p = x + (n * lay.c + c) * lay.inner;
        for (std::size_t i = 0; i < lay.inner; ++i) sq += (p[i] - mu) * (p[i] - mu);
      }
      const double var = sq / static_cast<double>(m);
      mean[c] = static_cast<T>(mu);
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + kBatchNormEpsilon));
      const double unbiased = m > 1 ? var * static_cast<double>(m) / static_cast<double>(m - 1) : var;
      Array<T>& rm = running_mean.mutable_array();
      Array<T>& rv = running_var.mutable_array();
      rm[c] = static_cast<T>(kBatchNormMomentum * rm[c] + (1.0 - kBatchNormMomentum) * mu);
      rv[c] = static_cast<T>(kBatchNormMomentum * rv[c] + (1.0 - kBatchNormMomentum) * unbiased);
    }
  } else {
    for (std::size_t c = 0; c < lay.c; ++c) {
      mean[c] = running_mean.array()[c];
      inv_std[c] = T{1} / std::sqrt(running_var.array()[c] + eps);
    }
  }

  Array<T> xhat(input.shape());
  Array<T> out(input.shape());
  for (std::size_t n = 0; n < lay.n; ++n)
    for (std::size_t c = 0; c < lay.c; ++c) {
      const std::size_t off = (n * lay.c + c) * lay.inner;
      const T g = gamma.array()[c], b = beta.array()[c];
      for (std::size_t i = 0; i < lay.inner; ++i) {
        const T h = (x[off + i] - mean[c]) * inv_std[c];
        xhat[off + i] = h;
        out[off + i] = g * h + b;
      }
    }
  debug_check_finite(out, "batchnorm3d");

  const bool train = mode == Mode::kTrain;
  return Tensor<T>::from_op(
      std::move(out), {input, gamma, beta},
      [lay, m, train, xhat = std::move(xhat), inv_std = std::move(inv_std)](detail::Node<T>& self) {
        const Array<T>& gy = self.grad;
        const Array<T>& g = self.parents[1]->value;
        auto* xin = parent_needing_grad(self, 0);
        auto* gam = parent_needing_grad(self, 1);
        auto* bet = parent_needing_grad(self, 2);
        for (std::size_t c = 0; c < lay.c; ++c) {
          double sum_dy = 0, sum_dy_xhat = 0;
          for (std::size_t n = 0; n < lay.n; ++n) {
            const std::size_t off = (n * lay.c + c) * lay.inner;
            for (std::size_t i = 0; i < lay.inner; ++i) {
              sum_dy += gy[off + i];
              sum_dy_xhat += gy[off + i] * xhat[off + i];
            }
          }
          if (gam) gam->grad_buffer()[c] += static_cast<T>(sum_dy_xhat);
          if (bet) bet->grad_buffer()[c] += static_cast<T>(sum_dy);
          if (!xin) continue;
          Array<T>& gx = xin->grad_buffer();
          const T scale = g[c] * inv_std[c];
          if (train) {
            const T mean_dy = static_cast<T>(sum_dy / static_cast<double>(m));
            const T mean_dy_xhat = static_cast<T>(sum_dy_xhat / static_cast<double>(m));
            for (std::size_t n = 0; n < lay.n; ++n) {
              const std::size_t off = (n * lay.c + c) * lay.inner;
              for (std::size_t i = 0; i < lay.inner; ++i)
                gx[off + i] += scale * (gy[off + i] - mean_dy - xhat[off + i] * mean_dy_xhat);
            }
          } else {
            for (std::size_t n = 0; n < lay.n; ++n) {
              const std::size_t off = (n * lay.c + c) * lay.inner;
              for (std::size_t i = 0; i < lay.inner; ++i) gx[off + i] += scale * gy[off + i];
            }
          }
        }
      });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Array<T> out(x.shape());
  const T* p = x.array().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = p[i] > T{0} ? p[i] : T{0};
  return Tensor<T>::from_op(std::move(out), {x}, [](detail::Node<T>& self) {
    auto* in = self.parents[0].get();
    Array<T>& g = in->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (in->value[i] > T{0}) g[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  constexpr T lo = std::numeric_limits<T>::min();
  const T hi = T{1} - std::numeric_limits<T>::epsilon() / 2;
  Array<T> out(x.shape());
  const T* p = x.array().data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = p[i];
    T s;
    if (v >= T{0}) {
      s = T{1} / (T{1} + std::exp(-v));
    } else {
      const T e = std::exp(v);
      s = e / (T{1} + e);
    }
    out[i] = std::clamp(s, lo, hi);
  }
  return Tensor<T>::from_op(std::move(out), {x}, [](detail::Node<T>& self) {
    Array<T>& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T y = self.value[i];
      g[i] += self.grad[i] * y * (T{1} - y);
    }
  });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, Mode mode, Rng& rng) {
  require(p >= 0.0 && p < 1.0, ErrorKind::kInvalidArgument, "dropout: p must lie in [0, 1)");
  if (mode == Mode::kInference || p == 0.0) return x;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  std::vector<T> mask(x.size());
  for (auto& m : mask) m = rng.uniform() >= p ? keep_scale : T{0};
  Array<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.array()[i] * mask[i];
  return Tensor<T>::from_op(std::move(out), {x}, [mask = std::move(mask)](detail::Node<T>& self) {
    Array<T>& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
  });
}

template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>> inputs) {
  require(!inputs.empty(), ErrorKind::kInvalidArgument, "concat_channels: no inputs");
  const Shape& first = inputs[0].shape();
  const std::size_t axis = channel_axis(first);
  const ChannelLayout lay0 = channel_layout(first, "concat_channels");
  std::vector<std::size_t> channels;
  std::size_t total = 0;
  for (const auto& t : inputs) {
    const Shape& s = t.shape();
    bool same = s.size() == first.size();
    for (std::size_t a = 0; same && a < s.size(); ++a)
      if (a != axis && s[a] != first[a]) same = false;
    require(same, ErrorKind::kShapeMismatch,
            "concat_channels: spatial mismatch " + shape_string(s) + " vs " + shape_string(first));
    channels.push_back(s[axis]);
    total += s[axis];
  }
  if (inputs.size() == 1) return inputs[0];
  Shape out_shape = first;
  out_shape[axis] = total;
  Array<T> out(out_shape);
  for (std::size_t n = 0; n < lay0.n; ++n) {
    T* dst = out.data() + n * total * lay0.inner;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      const std::size_t len = channels[k] * lay0.inner;
      const T* src = inputs[k].array().data() + n * len;
      dst = std::copy(src, src + len, dst);
    }
  }
  std::vector<Tensor<T>> parents(inputs.begin(), inputs.end());
  return Tensor<T>::from_op(std::move(out), std::move(parents),
                            [channels, lay0, total](detail::Node<T>& self) {
                              for (std::size_t n = 0; n < lay0.n; ++n) {
                                const T* src = self.grad.data() + n * total * lay0.inner;
                                for (std::size_t k = 0; k < channels.size(); ++k) {
                                  const std::size_t len = channels[k] * lay0.inner;
                                  if (auto* p = parent_needing_grad(self, k)) {
                                    T* dst = p->grad_buffer().data() + n * len;
                                    for (std::size_t i = 0; i < len; ++i) dst[i] += src[i];
                                  }
                                  src += len;
                                }
                              }
                            });
}

template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& x, std::span<const std::size_t> sizes) {
  const Shape& s = x.shape();
  const std::size_t axis = channel_axis(s);
  const ChannelLayout lay = channel_layout(s, "split_channels");
  std::size_t total = 0;
  for (auto c : sizes) total += c;
  require(total == lay.c, ErrorKind::kShapeMismatch,
          "split_channels: sizes sum to " + std::to_string(total) + " but tensor has " +
              std::to_string(lay.c) + " channels");
  std::vector<Tensor<T>> parts;
  std::size_t start = 0;
  for (auto c : sizes) {
    Shape part_shape = s;
    part_shape[axis] = c;
    Array<T> part(part_shape);
    for (std::size_t n = 0; n < lay.n; ++n) {
      const T* src = x.array().data() + (n * lay.c + start) * lay.inner;
      std::copy(src, src + c * lay.inner, part.data() + n * c * lay.inner);
    }
    parts.push_back(Tensor<T>::from_op(std::move(part), {x}, [lay, start, c](detail::Node<T>& self) {
      Array<T>& g = self.parents[0]->grad_buffer();
      for (std::size_t n = 0; n < lay.n; ++n) {
        const T* src = self.grad.data() + n * c * lay.inner;
        T* dst = g.data() + (n * lay.c + start) * lay.inner;
        for (std::size_t i = 0; i < c * lay.inner; ++i) dst[i] += src[i];
      }
    }));
    start += c;
  }
  return parts;
}

template <typename T>
Tensor<T> enlarge2x(const Tensor<T>& x) {
  Array<T> out = enlarge_array(x.array());
  const Shape in_shape = x.shape();
  return Tensor<T>::from_op(std::move(out), {x}, [in_shape](detail::Node<T>& self) {
    const std::size_t base = in_shape.size() - 3;
    Array<T> g = self.grad;
    for (std::size_t a = 3; a-- > 0;) {
      const std::size_t n = in_shape[base + a];
      g = interp_axis(g, a, enlarge_table(n), n, true);
    }
    accumulate(self.parents[0]->grad_buffer(), g);
  });
}

template <typename T>
Tensor<T> bce(const Tensor<T>& pred, const Array<T>& target) {
  require(pred.shape() == target.shape(), ErrorKind::kShapeMismatch,
          "bce: prediction " + shape_string(pred.shape()) + " vs target " + shape_string(target.shape()));
  const std::size_t n = pred.size();
  const double lo = kBceClamp, hi = 1.0 - kBceClamp;
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(static_cast<double>(pred.array()[i]), lo, hi);
    const double t = target[i];
    sum += t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  Array<T> out(Shape{}, std::vector<T>{static_cast<T>(-sum / static_cast<double>(n))});
  return Tensor<T>::from_op(std::move(out), {pred}, [target, n, lo, hi](detail::Node<T>& self) {
    auto* p = self.parents[0].get();
    Array<T>& g = p->grad_buffer();
    const double up = self.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double q = std::clamp(static_cast<double>(p->value[i]), lo, hi);
      g[i] += static_cast<T>(up * (q - target[i]) / (q * (1.0 - q)));
    }
  });
}

template <typename T>
Tensor<T> weighted_mae(const Tensor<T>& pred, const Array<T>& target, const Array<T>& weights) {
  require(pred.shape() == target.shape() && target.size() == weights.size(), ErrorKind::kShapeMismatch,
          "mae: prediction " + shape_string(pred.shape()) + " vs target " + shape_string(target.shape()));
  const std::size_t n = pred.size();
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) sum += weights[i] * std::abs(pred.array()[i] - target[i]);
  Array<T> out(Shape{}, std::vector<T>{static_cast<T>(sum / static_cast<double>(n))});
  return Tensor<T>::from_op(std::move(out), {pred}, [target, weights, n](detail::Node<T>& self) {
    auto* p = self.parents[0].get();
    Array<T>& g = p->grad_buffer();
    const T up = self.grad[0] / static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const T d = p->value[i] - target[i];
      const T sign = d > T{0} ? T{1} : (d < T{0} ? T{-1} : T{0});
      g[i] += up * weights[i] * sign;
    }
  });
}

template <typename T>
Tensor<T> mae(const Tensor<T>& pred, const Array<T>& target) {
  return weighted_mae(pred, target, Array<T>(target.shape(), T{1}));
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(), ErrorKind::kShapeMismatch,
          "add: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Array<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.array()[i] + b.array()[i];
  return Tensor<T>::from_op(std::move(out), {a, b}, [](detail::Node<T>& self) {
    for (std::size_t k = 0; k < 2; ++k)
      if (auto* p = parent_needing_grad(self, k)) accumulate(p->grad_buffer(), self.grad);
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  Array<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.array()[i] * factor;
  return Tensor<T>::from_op(std::move(out), {a}, [factor](detail::Node<T>& self) {
    Array<T>& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  double sum = 0;
  for (T v : a.values()) sum += v;
  const std::size_t n = a.size();
  Array<T> out(Shape{}, std::vector<T>{static_cast<T>(sum / static_cast<double>(n))});
  return Tensor<T>::from_op(std::move(out), {a}, [n](detail::Node<T>& self) {
    Array<T>& g = self.parents[0]->grad_buffer();
    const T up = self.grad[0] / static_cast<T>(n);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += up;
  });
}

#define NODULEFORGE_INSTANTIATE(T)                                                                   \
  template Tensor<T> conv3d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*, const ConvSpec&);  \
  template Tensor<T> conv_transpose3d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*,          \
                                      const ConvSpec&);                                              \
  template PoolResult<T> maxpool3d(const Tensor<T>&);                                                \
  template Tensor<T> batchnorm3d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>&,   \
                                 Tensor<T>&, Mode);                                                  \
  template Tensor<T> relu(const Tensor<T>&);                                                         \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                      \
  template Tensor<T> dropout(const Tensor<T>&, double, Mode, Rng&);                                  \
  template Tensor<T> concat_channels(std::span<const Tensor<T>>);                                    \
  template std::vector<Tensor<T>> split_channels(const Tensor<T>&, std::span<const std::size_t>);    \
  template Tensor<T> enlarge2x(const Tensor<T>&);                                                    \
  template Tensor<T> bce(const Tensor<T>&, const Array<T>&);                                         \
  template Tensor<T> mae(const Tensor<T>&, const Array<T>&);                                         \
  template Tensor<T> weighted_mae(const Tensor<T>&, const Array<T>&, const Array<T>&);               \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> scale(const Tensor<T>&, T);                                                     \
  template Tensor<T> mean(const Tensor<T>&);
NODULEFORGE_INSTANTIATE(float)
NODULEFORGE_INSTANTIATE(double)
#undef NODULEFORGE_INSTANTIATE

}  // namespace ops

template <typename T>
Array<T> enlarge_patch(const Array<T>& patch) {
  return enlarge_array(patch);
}

template Array<float> enlarge_patch(const Array<float>&);
template Array<double> enlarge_patch(const Array<double>&);

}  // namespace noduleforge
