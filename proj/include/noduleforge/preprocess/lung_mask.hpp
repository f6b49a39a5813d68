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

#include "noduleforge/io/volume.hpp"

namespace noduleforge {

inline constexpr int kClosingRadius = 2;
inline constexpr int kDilationRadius = 5;
inline constexpr float kMaskPadHu = 170.0f;

struct LungMaskStats {
  std::size_t degenerate_slices = 0;
  std::size_t foreground_voxels = 0;
};

/// Slice-wise OTSU low class, minus border-connected air, closed, hole-filled
/// and dilated.
Mask3 segment_lung(const Volume& volume, std::size_t workers = 1, LungMaskStats* stats = nullptr);

/// Voxels outside the mask are replaced with `pad_hu`.
Volume apply_mask(const Volume& volume, const Mask3& mask, float pad_hu = kMaskPadHu);

/// Resample to 1 mm, segment, mask. The mask is returned through `mask_out`
/// when given.
Volume preprocess_scan(const Volume& raw, std::size_t workers = 1, Mask3* mask_out = nullptr);

Volume mask_as_volume(const Volume& like, const Mask3& mask);
Mask3 volume_as_mask(const Volume& volume);

}  // namespace noduleforge
