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

#include "noduleforge/preprocess/lung_mask.hpp"

#include <atomic>

#include "noduleforge/core/error.hpp"
#include "noduleforge/core/parallel.hpp"
#include "noduleforge/preprocess/morphology.hpp"
#include "noduleforge/preprocess/otsu.hpp"
#include "noduleforge/preprocess/resample.hpp"

namespace noduleforge {

Mask3 segment_lung(const Volume& volume, std::size_t workers, LungMaskStats* stats) {
  const auto& grid = volume.voxels;
  const std::size_t h = grid.height();
  const std::size_t w = grid.width();
  Mask3 mask(grid.extents(), 0);
  std::atomic<std::size_t> degenerate{0};
  parallel_for(grid.depth(), workers, [&](std::size_t z) {
    const std::span<const float> slice = grid.values().subspan(z * h * w, h * w);
    const OtsuResult otsu = otsu_threshold(hu_histogram(slice));
    if (otsu.degenerate) {
      ++degenerate;
      return;
    }
    Plane low(h, w);
    for (std::size_t i = 0; i < h * w; ++i) low.pixels[i] = otsu_bin(slice[i]) <= otsu.bin;
    Plane lung = remove_border_components(low);
    lung = fill_holes(close_disk(lung, kClosingRadius));
    lung = dilate_disk(lung, kDilationRadius);
    std::copy(lung.pixels.begin(), lung.pixels.end(), mask.data() + z * h * w);
  });
  if (stats) {
    stats->degenerate_slices = degenerate;
    stats->foreground_voxels = 0;
    for (auto v : mask.values()) stats->foreground_voxels += v;
  }
  return mask;
}

Volume apply_mask(const Volume& volume, const Mask3& mask, float pad_hu) {
  require(mask.extents() == volume.voxels.extents(), ErrorKind::kShapeMismatch,
          "apply_mask: mask extents differ from volume extents");
  Volume out = volume;
  auto values = out.voxels.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!mask[i]) values[i] = pad_hu;
  }
  return out;
}

Volume preprocess_scan(const Volume& raw, std::size_t workers, Mask3* mask_out) {
  Volume resampled = resample(raw);
  Mask3 mask = segment_lung(resampled, workers);
  Volume masked = apply_mask(resampled, mask);
  if (mask_out) *mask_out = std::move(mask);
  return masked;
}

Volume mask_as_volume(const Volume& like, const Mask3& mask) {
  Grid3<float> voxels(mask.extents());
  for (std::size_t i = 0; i < mask.size(); ++i) voxels[i] = mask[i];
  return with_voxels(like, std::move(voxels));
}

Mask3 volume_as_mask(const Volume& volume) {
  Mask3 mask(volume.voxels.extents());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = volume.voxels[i] != 0.0f;
  return mask;
}

}  // namespace noduleforge
