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

/// Rigid transforms about the Z axis, acting on the (H, W) plane.
enum class ZTransform : std::uint8_t {
  kIdentity = 0,
  kRot90,
  kRot180,
  kRot270,
  kFlip,
  kFlipRot90,
};

inline constexpr std::array<ZTransform, 5> kAugmentations{
    ZTransform::kRot90, ZTransform::kRot180, ZTransform::kRot270, ZTransform::kFlip,
    ZTransform::kFlipRot90};
inline constexpr std::array<ZTransform, 6> kAllTransforms{
    ZTransform::kIdentity, ZTransform::kRot90, ZTransform::kRot180,
    ZTransform::kRot270,   ZTransform::kFlip,  ZTransform::kFlipRot90};

/// Applies `t` to every [.., D, H, W] plane stack; H must equal W.
/// rot90 maps (y, x) to (x, W - 1 - y); flip maps x to W - 1 - x;
/// kFlipRot90 is rot90 followed by flip.
template <typename T>
Array<T> apply_transform(const Array<T>& patch, ZTransform t);

/// The five augmented copies, in kAugmentations order.
template <typename T>
std::array<Array<T>, 5> augment(const Array<T>& patch);

}  // namespace noduleforge
