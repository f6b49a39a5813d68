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

#include "noduleforge/core/conv.hpp"

#include <string>
#include <vector>

#include "noduleforge/core/error.hpp"
#include "noduleforge/kernels/kernels.hpp"

namespace noduleforge {
namespace {

constexpr const char* kAxisNames[3] = {"depth", "height", "width"};

std::size_t round_up(std::size_t x, std::size_t m) { return (x + m - 1) / m * m; }

struct Batched {
  std::size_t n, c;
  std::array<std::size_t, 3> spatial;
};

Batched batched_dims(const Shape& s, const std::string& op) {
  if (s.size() == 4) return {1, s[0], {s[1], s[2], s[3]}};
  if (s.size() == 5) return {s[0], s[1], {s[2], s[3], s[4]}};
  fail(ErrorKind::kShapeMismatch, op + ": expected rank 4 or 5 input, got " + shape_string(s));
}

Shape make_shape(std::size_t rank, std::size_t n, std::size_t c, const std::array<std::size_t, 3>& sp) {
  if (rank == 4) return {c, sp[0], sp[1], sp[2]};
  return {n, c, sp[0], sp[1], sp[2]};
}

void check_weights(const Shape& w, const ConvSpec& spec, const std::string& op) {
  require(w.size() == 5, ErrorKind::kShapeMismatch,
          op + ": weights must be rank 5, got " + shape_string(w));
  for (std::size_t a = 0; a < 3; ++a) {
    require(w[2 + a] == spec.kernel[a], ErrorKind::kShapeMismatch,
            op + ": weights " + kAxisNames[a] + " kernel axis is " + std::to_string(w[2 + a]) +
                " but spec says " + std::to_string(spec.kernel[a]));
  }
}

/// Zero-padded volume with padded strides; kernel taps become flat offsets.
struct FlatGeometry {
  std::array<std::size_t, 3> input{};
  std::array<std::size_t, 3> padded{};
  std::array<std::size_t, 3> full{};  // stride-1 output extents
  std::array<std::size_t, 3> out{};   // strided output extents
  std::size_t plane = 0;
  std::size_t volume = 0;
  std::size_t stride = 1;
  std::vector<std::size_t> taps;
  std::size_t max_offset = 0;
  std::size_t flat_length = 0;
  std::size_t slack = 0;
  std::array<std::size_t, 3> pad{};

  FlatGeometry(const std::array<std::size_t, 3>& in, const ConvSpec& spec, const std::string& op)
      : input(in), stride(spec.stride), pad(spec.padding) {
    for (std::size_t a = 0; a < 3; ++a) {
      padded[a] = in[a] + 2 * spec.padding[a];
      const std::size_t eff = spec.effective_extent(a);
      require(padded[a] >= eff, ErrorKind::kShapeMismatch,
              op + ": " + kAxisNames[a] + " axis padded extent " + std::to_string(padded[a]) +
                  " is smaller than the effective kernel extent " + std::to_string(eff));
      full[a] = padded[a] - eff + 1;
      out[a] = (full[a] - 1) / spec.stride + 1;
    }
    plane = padded[1] * padded[2];
    volume = padded[0] * plane;
    const std::size_t d = spec.dilation;
    taps.reserve(spec.taps());
    for (std::size_t kz = 0; kz < spec.kernel[0]; ++kz)
      for (std::size_t ky = 0; ky < spec.kernel[1]; ++ky)
        for (std::size_t kx = 0; kx < spec.kernel[2]; ++kx)
          taps.push_back(kz * d * plane + ky * d * padded[2] + kx * d);
    max_offset = taps.back();
    flat_length = round_up(full[0] * plane, kernels::kFlatChunk);
    slack = (spec.kernel[1] - 1) * d * padded[2] + (spec.kernel[2] - 1) * d + kernels::kFlatChunk;
  }

  std::size_t out_voxels() const { return out[0] * out[1] * out[2]; }
  std::size_t in_voxels() const { return input[0] * input[1] * input[2]; }
  std::size_t flat_index_of_output(std::size_t z, std::size_t y, std::size_t x) const {
    return z * stride * plane + y * stride * padded[2] + x * stride;
  }
};

template <typename T>
std::vector<T> pad_sample(const T* x, std::size_t channels, const FlatGeometry& g) {
  std::vector<T> xp(channels * g.volume + g.slack, T{0});
  for (std::size_t c = 0; c < channels; ++c) {
    const T* src = x + c * g.in_voxels();
    T* dst = xp.data() + c * g.volume;
    for (std::size_t z = 0; z < g.input[0]; ++z)
      for (std::size_t y = 0; y < g.input[1]; ++y) {
        const T* row = src + (z * g.input[1] + y) * g.input[2];
        T* drow = dst + (z + g.pad[0]) * g.plane + (y + g.pad[1]) * g.padded[2] + g.pad[2];
        std::copy(row, row + g.input[2], drow);
      }
  }
  return xp;
}

/// Upstream gradient scattered into the stride-1 flat output layout.
template <typename T>
std::vector<T> scatter_upstream(const T* up, std::size_t channels, const FlatGeometry& g) {
  std::vector<T> flat(channels * g.flat_length, T{0});
  for (std::size_t c = 0; c < channels; ++c) {
    const T* src = up + c * g.out_voxels();
    T* dst = flat.data() + c * g.flat_length;
    for (std::size_t z = 0; z < g.out[0]; ++z)
      for (std::size_t y = 0; y < g.out[1]; ++y)
        for (std::size_t x = 0; x < g.out[2]; ++x)
          dst[g.flat_index_of_output(z, y, x)] = *src++;
  }
  return flat;
}

template <typename T>
void forward_sample(const T* x, std::size_t cin, const T* w, std::size_t cout, const FlatGeometry& g,
                    const T* bias, T* out) {
  std::vector<T> xp = pad_sample(x, cin, g);
  std::vector<T> flat(cout * g.flat_length);
  kernels::flat_forward(kernels::FlatForwardArgs<T>{xp.data(), g.volume, cin, w, g.taps.data(),
                                                     g.taps.size(), flat.data(), g.flat_length, cout,
                                                     g.flat_length});
  for (std::size_t co = 0; co < cout; ++co) {
    const T b = bias ? bias[co] : T{0};
    const T* src = flat.data() + co * g.flat_length;
    for (std::size_t z = 0; z < g.out[0]; ++z)
      for (std::size_t y = 0; y < g.out[1]; ++y)
        for (std::size_t xx = 0; xx < g.out[2]; ++xx) *out++ = src[g.flat_index_of_output(z, y, xx)] + b;
  }
}

/// Gradient w.r.t. the (unpadded) conv input for one sample.
template <typename T>
void input_grad_sample(const std::vector<T>& upstream_flat, std::size_t cout, const T* w,
                       std::size_t cin, const FlatGeometry& g, T* grad_in) {
  const std::size_t margin = g.max_offset;
  const std::size_t g_stride = g.volume + margin + kernels::kFlatChunk;
  std::vector<T> gp(cout * g_stride + kernels::kFlatChunk, T{0});
  for (std::size_t co = 0; co < cout; ++co) {
    const T* src = upstream_flat.data() + co * g.flat_length;
    std::copy(src, src + g.flat_length, gp.data() + co * g_stride + margin);
  }
  const std::size_t ntaps = g.taps.size();
  std::vector<T> wt(cin * cout * ntaps);
  for (std::size_t co = 0; co < cout; ++co)
    for (std::size_t ci = 0; ci < cin; ++ci)
      for (std::size_t t = 0; t < ntaps; ++t)
        wt[(ci * cout + co) * ntaps + t] = w[(co * cin + ci) * ntaps + (ntaps - 1 - t)];

  const std::size_t length = round_up(g.volume, kernels::kFlatChunk);
  std::vector<T> flat(cin * length);
  kernels::flat_forward(kernels::FlatForwardArgs<T>{gp.data(), g_stride, cout, wt.data(), g.taps.data(),
                                                     ntaps, flat.data(), length, cin, length});
  for (std::size_t ci = 0; ci < cin; ++ci) {
    const T* src = flat.data() + ci * length;
    for (std::size_t z = 0; z < g.input[0]; ++z)
      for (std::size_t y = 0; y < g.input[1]; ++y) {
        const T* row = src + (z + g.pad[0]) * g.plane + (y + g.pad[1]) * g.padded[2] + g.pad[2];
        grad_in = std::copy(row, row + g.input[2], grad_in);
      }
  }
}

template <typename T>
void weight_grad_sample(const std::vector<T>& upstream_flat, std::size_t cout, const T* x,
                        std::size_t cin, const FlatGeometry& g, T* grad_w, std::vector<T>& scratch) {
  std::vector<T> xp = pad_sample(x, cin, g);
  kernels::flat_weight_grad(kernels::FlatWeightGradArgs<T>{xp.data(), g.volume, cin, upstream_flat.data(),
                                                            g.flat_length, cout, g.taps.data(),
                                                            g.taps.size(), g.flat_length, grad_w,
                                                            scratch.data()});
}

/// Shared core for conv backward and transposed-conv forward/backward.
/// `x` is the conv input (may be null when only the input gradient is
/// needed); `upstream` is the gradient at the conv output.
template <typename T>
void conv_grads(const T* upstream, const T* x, std::size_t n, std::size_t cin, std::size_t cout,
                const Array<T>& weights, const FlatGeometry& g, T* grad_in, T* grad_w) {
  std::vector<T> scratch;
  if (grad_w) scratch.assign(2 * cin * g.taps.size() * kernels::kMaxLanes, T{0});
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<T> flat = scatter_upstream(upstream + s * cout * g.out_voxels(), cout, g);
    if (grad_w) weight_grad_sample(flat, cout, x + s * cin * g.in_voxels(), cin, g, grad_w, scratch);
    if (grad_in) input_grad_sample(flat, cout, weights.data(), cin, g, grad_in + s * cin * g.in_voxels());
  }
}

}  // namespace

ConvSpec ConvSpec::same(std::size_t k, std::size_t dilation, std::size_t out_channels) {
  ConvSpec s;
  s.kernel = {k, k, k};
  s.dilation = dilation;
  s.stride = 1;
  const std::size_t p = (k - 1) * dilation / 2;
  s.padding = {p, p, p};
  s.out_channels = out_channels;
  return s;
}

ConvSpec ConvSpec::upsample2x(std::size_t k, std::size_t out_channels) {
  ConvSpec s = same(k, 1, out_channels);
  s.stride = 2;
  return s;
}

void ConvSpec::validate() const {
  for (std::size_t a = 0; a < 3; ++a) {
    require(kernel[a] > 0 && kernel[a] % 2 == 1, ErrorKind::kInvalidArgument,
            std::string("conv spec: ") + kAxisNames[a] + " kernel extent must be odd and positive");
  }
  require(dilation > 0, ErrorKind::kInvalidArgument, "conv spec: dilation must be positive");
  require(stride > 0, ErrorKind::kInvalidArgument, "conv spec: stride must be positive");
  require(out_channels > 0, ErrorKind::kInvalidArgument, "conv spec: out_channels must be positive");
}

std::size_t ConvSpec::output_extent(std::size_t input, std::size_t axis) const {
  const std::size_t padded = input + 2 * padding[axis];
  const std::size_t eff = effective_extent(axis);
  require(padded >= eff, ErrorKind::kShapeMismatch,
          std::string("conv: ") + kAxisNames[axis] + " axis padded extent " + std::to_string(padded) +
              " is smaller than the effective kernel extent " + std::to_string(eff));
  return (padded - eff) / stride + 1;
}

std::size_t conv3d_macs(std::size_t in_channels, const std::array<std::size_t, 3>& out_extent,
                        const ConvSpec& spec) {
  return out_extent[0] * out_extent[1] * out_extent[2] * spec.taps() * in_channels * spec.out_channels;
}

template <typename T>
Array<T> conv3d_forward(const Array<T>& input, const Array<T>& weights, const Array<T>* bias,
                        const ConvSpec& spec) {
  spec.validate();
  const Batched in = batched_dims(input.shape(), "conv3d");
  check_weights(weights.shape(), spec, "conv3d");
  const std::size_t cout = weights.extent(0);
  require(weights.extent(1) == in.c, ErrorKind::kShapeMismatch,
          "conv3d: input channel axis has " + std::to_string(in.c) + " but weights expect " +
              std::to_string(weights.extent(1)));
  require(cout == spec.out_channels, ErrorKind::kShapeMismatch,
          "conv3d: weights output-channel axis is " + std::to_string(cout) + " but spec says " +
              std::to_string(spec.out_channels));
  if (bias) {
    require(bias->size() == cout, ErrorKind::kShapeMismatch,
            "conv3d: bias has " + std::to_string(bias->size()) + " entries for " +
                std::to_string(cout) + " output channels");
  }
  const FlatGeometry g(in.spatial, spec, "conv3d");
  Array<T> out(make_shape(input.rank(), in.n, cout, g.out));
  for (std::size_t s = 0; s < in.n; ++s) {
    forward_sample(input.data() + s * in.c * g.in_voxels(), in.c, weights.data(), cout, g,
                   bias ? bias->data() : nullptr, out.data() + s * cout * g.out_voxels());
  }
  debug_check_finite(out, "conv3d");
  return out;
}

template <typename T>
ConvGrads<T> conv3d_backward(const Array<T>& upstream, const Array<T>& saved_input,
                             const Array<T>& weights, const ConvSpec& spec, bool need_input_grad) {
  require(!saved_input.empty(), ErrorKind::kMissingInput,
          "conv3d_backward: missing saved forward input");
  require(!weights.empty(), ErrorKind::kMissingInput, "conv3d_backward: missing weights");
  spec.validate();
  const Batched in = batched_dims(saved_input.shape(), "conv3d_backward");
  check_weights(weights.shape(), spec, "conv3d_backward");
  const std::size_t cout = weights.extent(0);
  const FlatGeometry g(in.spatial, spec, "conv3d_backward");
  const Shape expected = make_shape(saved_input.rank(), in.n, cout, g.out);
  require(upstream.shape() == expected, ErrorKind::kShapeMismatch,
          "conv3d_backward: upstream gradient shape " + shape_string(upstream.shape()) +
              " does not match forward output " + shape_string(expected));

  ConvGrads<T> grads;
  grads.weights = Array<T>(weights.shape(), T{0});
  grads.bias = Array<T>(Shape{cout}, T{0});
  if (need_input_grad) grads.input = Array<T>(saved_input.shape(), T{0});
  conv_grads(upstream.data(), saved_input.data(), in.n, in.c, cout, weights, g,
             need_input_grad ? grads.input.data() : nullptr, grads.weights.data());
  for (std::size_t s = 0; s < in.n; ++s)
    for (std::size_t co = 0; co < cout; ++co) {
      const T* up = upstream.data() + (s * cout + co) * g.out_voxels();
      T sum{0};
      for (std::size_t i = 0; i < g.out_voxels(); ++i) sum += up[i];
      grads.bias[co] += sum;
    }
  return grads;
}

namespace {

/// Conv geometry whose output matches a transposed-conv input of `spatial`.
FlatGeometry transpose_geometry(const std::array<std::size_t, 3>& spatial, const ConvSpec& spec,
                                const std::string& op) {
  std::array<std::size_t, 3> target{};
  for (std::size_t a = 0; a < 3; ++a) {
    target[a] = spatial[a] * spec.stride;
    require(spec.output_extent(target[a], a) == spatial[a], ErrorKind::kShapeMismatch,
            op + ": " + kAxisNames[a] + " axis extent " + std::to_string(spatial[a]) +
                " cannot be upsampled by stride " + std::to_string(spec.stride) +
                " under this kernel/padding");
  }
  return FlatGeometry(target, spec, op);
}

}  // namespace

template <typename T>
Array<T> conv_transpose3d_forward(const Array<T>& input, const Array<T>& weights, const Array<T>* bias,
                                  const ConvSpec& spec) {
  spec.validate();
  const Batched in = batched_dims(input.shape(), "conv_transpose3d");
  check_weights(weights.shape(), spec, "conv_transpose3d");
  require(weights.extent(0) == in.c, ErrorKind::kShapeMismatch,
          "conv_transpose3d: input channel axis has " + std::to_string(in.c) +
              " but weights expect " + std::to_string(weights.extent(0)));
  const std::size_t cout = weights.extent(1);
  require(cout == spec.out_channels, ErrorKind::kShapeMismatch,
          "conv_transpose3d: weights output-channel axis is " + std::to_string(cout) +
              " but spec says " + std::to_string(spec.out_channels));
  const FlatGeometry g = transpose_geometry(in.spatial, spec, "conv_transpose3d");
  Array<T> out(make_shape(input.rank(), in.n, cout, g.input));
  // Conv view: conv input channels = cout, conv output channels = in.c.
  conv_grads<T>(input.data(), nullptr, in.n, cout, in.c, weights, g, out.data(), nullptr);
  if (bias) {
    require(bias->size() == cout, ErrorKind::kShapeMismatch, "conv_transpose3d: bias size mismatch");
    for (std::size_t s = 0; s < in.n; ++s)
      for (std::size_t c = 0; c < cout; ++c) {
        T* o = out.data() + (s * cout + c) * g.in_voxels();
        for (std::size_t i = 0; i < g.in_voxels(); ++i) o[i] += (*bias)[c];
      }
  }
  debug_check_finite(out, "conv_transpose3d");
  return out;
}

template <typename T>
ConvGrads<T> conv_transpose3d_backward(const Array<T>& upstream, const Array<T>& saved_input,
                                       const Array<T>& weights, const ConvSpec& spec,
                                       bool need_input_grad) {
  require(!saved_input.empty(), ErrorKind::kMissingInput,
          "conv_transpose3d_backward: missing saved forward input");
  spec.validate();
  const Batched in = batched_dims(saved_input.shape(), "conv_transpose3d_backward");
  check_weights(weights.shape(), spec, "conv_transpose3d_backward");
  const std::size_t cout = weights.extent(1);
  const FlatGeometry g = transpose_geometry(in.spatial, spec, "conv_transpose3d_backward");
  const Shape expected = make_shape(saved_input.rank(), in.n, cout, g.input);
  require(upstream.shape() == expected, ErrorKind::kShapeMismatch,
          "conv_transpose3d_backward: upstream gradient shape " + shape_string(upstream.shape()) +
              " does not match forward output " + shape_string(expected));

  ConvGrads<T> grads;
  grads.weights = Array<T>(weights.shape(), T{0});
  grads.bias = Array<T>(Shape{cout}, T{0});
  if (need_input_grad) {
    ConvSpec conv_spec = spec;
    conv_spec.out_channels = in.c;
    grads.input = conv3d_forward(upstream, weights, static_cast<const Array<T>*>(nullptr), conv_spec);
  }
  // In the conv view the transposed layer's output is the conv input and its
  // input is the conv output gradient.
  conv_grads<T>(saved_input.data(), upstream.data(), in.n, cout, in.c, weights, g, nullptr,
                grads.weights.data());
  for (std::size_t s = 0; s < in.n; ++s)
    for (std::size_t c = 0; c < cout; ++c) {
      const T* up = upstream.data() + (s * cout + c) * g.in_voxels();
      T sum{0};
      for (std::size_t i = 0; i < g.in_voxels(); ++i) sum += up[i];
      grads.bias[c] += sum;
    }
  return grads;
}

#define NODULEFORGE_INSTANTIATE(T)                                                                \
  template Array<T> conv3d_forward(const Array<T>&, const Array<T>&, const Array<T>*,             \
                                   const ConvSpec&);                                              \
  template ConvGrads<T> conv3d_backward(const Array<T>&, const Array<T>&, const Array<T>&,        \
                                        const ConvSpec&, bool);                                   \
  template Array<T> conv_transpose3d_forward(const Array<T>&, const Array<T>&, const Array<T>*,   \
                                             const ConvSpec&);                                    \
  template ConvGrads<T> conv_transpose3d_backward(const Array<T>&, const Array<T>&,               \
                                                  const Array<T>&, const ConvSpec&, bool);
NODULEFORGE_INSTANTIATE(float)
NODULEFORGE_INSTANTIATE(double)
#undef NODULEFORGE_INSTANTIATE

}  // namespace noduleforge
