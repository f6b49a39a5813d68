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

#pragma once

#include <array>
#include <cstddef>

#include "noduleforge/core/tensor.hpp"

namespace noduleforge {

/// Geometry of a 3D convolution. Kernels are applied as cross-correlation
/// (no flip). Axis order is (depth, height, width).
struct ConvSpec {
  std::array<std::size_t, 3> kernel{3, 3, 3};
  std::size_t dilation = 1;
  std::size_t stride = 1;
  std::array<std::size_t, 3> padding{0, 0, 0};
  std::size_t out_channels = 1;

  /// Cubic kernel with "same" padding ((k - 1) * dilation / 2).
  static ConvSpec same(std::size_t k, std::size_t dilation, std::size_t out_channels);
  /// k x k x k stride-2 spec used by the decoder's transposed convolutions.
  static ConvSpec upsample2x(std::size_t k, std::size_t out_channels);

  std::size_t effective_extent(std::size_t axis) const { return (kernel[axis] - 1) * dilation + 1; }
  std::size_t taps() const { return kernel[0] * kernel[1] * kernel[2]; }
  /// Output extent along `axis` for an input extent; throws when the padded
  /// input is smaller than the effective kernel.
  std::size_t output_extent(std::size_t input, std::size_t axis) const;
  void validate() const;
};

template <typename T>
struct ConvGrads {
  Array<T> input;
  Array<T> weights;
  Array<T> bias;
};

// Inputs are [C, D, H, W] or batched [N, C, D, H, W]; outputs keep the rank.
// Convolution weights are [C_out, C_in, kd, kh, kw]. Transposed-convolution
// weights use the layout of the convolution they are the adjoint of, i.e.
// [C_in, C_out, kd, kh, kw] of the transposed layer.

template <typename T>
Array<T> conv3d_forward(const Array<T>& input, const Array<T>& weights, const Array<T>* bias,
                        const ConvSpec& spec);

/// Gradients of a conv3d call. `saved_input` must be the forward input.
template <typename T>
ConvGrads<T> conv3d_backward(const Array<T>& upstream, const Array<T>& saved_input,
                             const Array<T>& weights, const ConvSpec& spec,
                             bool need_input_grad = true);

/// Adjoint of conv3d with respect to its input. Output spatial extent is
/// input extent * stride.
template <typename T>
Array<T> conv_transpose3d_forward(const Array<T>& input, const Array<T>& weights,
                                  const Array<T>* bias, const ConvSpec& spec);

template <typename T>
ConvGrads<T> conv_transpose3d_backward(const Array<T>& upstream, const Array<T>& saved_input,
                                       const Array<T>& weights, const ConvSpec& spec,
                                       bool need_input_grad = true);

/// Multiply-accumulate count of one conv3d forward on a single sample.
std::size_t conv3d_macs(std::size_t in_channels, const std::array<std::size_t, 3>& out_extent,
                        const ConvSpec& spec);

}  // namespace noduleforge
