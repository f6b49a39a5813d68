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

// Flat convolution kernels. Every 3D convolution in the library (forward,
// input gradient, weight gradient, transposed convolution) is lowered to
// these two loops over a zero-padded volume laid out with padded strides,
// so that each kernel tap is a constant offset into a contiguous buffer.
//
// The scalar variants are the reference; the AVX2 variants must agree with
// them up to floating-point reassociation.

#include <cstddef>
#include <string_view>

namespace noduleforge::kernels {

/// Every flat length handed to a kernel is a multiple of this.
inline constexpr std::size_t kFlatChunk = 32;
/// Upper bound on SIMD lanes; sizes the weight-gradient scratch.
inline constexpr std::size_t kMaxLanes = 8;

enum class Backend { kScalar, kAvx2 };

std::string_view to_string(Backend backend);

/// output[co][i] = sum_ci sum_t weights[co][ci][t] * input[ci][i + taps[t]]
/// for i in [0, length). Overwrites output.
template <typename T>
struct FlatForwardArgs {
  const T* input;
  std::size_t input_stride;
  std::size_t in_channels;
  const T* weights;
  const std::size_t* tap_offsets;
  std::size_t taps;
  T* output;
  std::size_t output_stride;
  std::size_t out_channels;
  std::size_t length;
};

/// weight_grad[co][ci][t] += sum_i upstream[co][i] * input[ci][i + taps[t]].
/// `scratch` holds at least 2 * in_channels * taps * kMaxLanes elements.
template <typename T>
struct FlatWeightGradArgs {
  const T* input;
  std::size_t input_stride;
  std::size_t in_channels;
  const T* upstream;
  std::size_t upstream_stride;
  std::size_t out_channels;
  const std::size_t* tap_offsets;
  std::size_t taps;
  std::size_t length;
  T* weight_grad;
  T* scratch;
};

bool backend_available(Backend backend);
/// Backend chosen at first use: AVX2 when the CPU supports AVX2+FMA, unless
/// NODULEFORGE_SIMD=scalar is set in the environment.
Backend active_backend();
/// Overrides the active backend; throws if it is unavailable on this CPU.
void set_backend(Backend backend);

void flat_forward(const FlatForwardArgs<float>& args);
void flat_forward(const FlatForwardArgs<double>& args);
void flat_weight_grad(const FlatWeightGradArgs<float>& args);
void flat_weight_grad(const FlatWeightGradArgs<double>& args);

namespace scalar {
void flat_forward(const FlatForwardArgs<float>& args);
void flat_forward(const FlatForwardArgs<double>& args);
void flat_weight_grad(const FlatWeightGradArgs<float>& args);
void flat_weight_grad(const FlatWeightGradArgs<double>& args);
}  // namespace scalar

namespace avx2 {
void flat_forward(const FlatForwardArgs<float>& args);
void flat_forward(const FlatForwardArgs<double>& args);
void flat_weight_grad(const FlatWeightGradArgs<float>& args);
void flat_weight_grad(const FlatWeightGradArgs<double>& args);
}  // namespace avx2

}  // namespace noduleforge::kernels
