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

#include <cstddef>
#include <span>
#include <vector>

#include "noduleforge/core/conv.hpp"
#include "noduleforge/core/rng.hpp"
#include "noduleforge/core/tensor.hpp"

namespace noduleforge {

enum class Mode { kTrain, kInference };

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;
inline constexpr double kBceClamp = 1e-7;

namespace ops {

template <typename T>
Tensor<T> conv3d(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>* bias,
                 const ConvSpec& spec);

template <typename T>
Tensor<T> conv_transpose3d(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>* bias,
                           const ConvSpec& spec);

template <typename T>
struct PoolResult {
  Tensor<T> output;
  /// Flat input index of the maximum for every output element.
  std::vector<std::size_t> argmax;
};

/// 2x2x2 window, stride 2. Odd extents behave as if padded with -inf, so
/// the output extent is ceil(extent / 2).
template <typename T>
PoolResult<T> maxpool3d(const Tensor<T>& input);

/// Per-channel batch normalization over (N, D, H, W). Training mode uses
/// batch statistics and folds them into the running buffers; inference mode
/// uses the running buffers.
template <typename T>
Tensor<T> batchnorm3d(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                      Tensor<T>& running_mean, Tensor<T>& running_var, Mode mode);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
/// Logistic function, clamped so outputs lie strictly inside (0, 1).
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T>
Tensor<T> linear(const Tensor<T>& x) {
  return x;
}

/// Inverted dropout: survivors are scaled by 1 / (1 - p) at train time.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, Mode mode, Rng& rng);

/// Concatenates along the channel axis (axis 0 for rank 4, 1 for rank 5).
template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>> inputs);
template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& x, std::span<const std::size_t> sizes);

/// Trilinear x2 upsampling; output voxel o samples input coordinate o / 2,
/// clamped to the last input voxel.
template <typename T>
Tensor<T> enlarge2x(const Tensor<T>& x);

/// Mean binary cross-entropy with predictions clamped to [1e-7, 1 - 1e-7].
template <typename T>
Tensor<T> bce(const Tensor<T>& pred, const Array<T>& target);
/// Mean absolute error; subgradient 0 where pred == target.
template <typename T>
Tensor<T> mae(const Tensor<T>& pred, const Array<T>& target);
/// mean_i weights[i] * |pred[i] - target[i]|.
template <typename T>
Tensor<T> weighted_mae(const Tensor<T>& pred, const Array<T>& target, const Array<T>& weights);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);
/// Mean of all elements as a scalar tensor.
template <typename T>
Tensor<T> mean(const Tensor<T>& a);

}  // namespace ops

/// Plain (non-graph) trilinear x2 upsampling of a [C, D, H, W] array.
template <typename T>
Array<T> enlarge_patch(const Array<T>& patch);

}  // namespace noduleforge
