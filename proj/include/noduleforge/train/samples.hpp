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
#include <filesystem>
#include <span>
#include <vector>

#include "noduleforge/core/rng.hpp"
#include "noduleforge/core/tensor.hpp"
#include "noduleforge/io/tables.hpp"
#include "noduleforge/io/volume.hpp"
#include "noduleforge/train/augment.hpp"

namespace noduleforge {

/// A preprocessed scan: 1 mm isotropic, masked HU, with its lung mask.
struct ScanData {
  Volume volume;
  Mask3 mask;
  std::vector<Annotation> annotations;
};

using VoxelIndex = std::array<long, 3>;

/// Lazy description of one training sample; patches are cut on demand.
struct SampleRef {
  std::size_t scan = 0;
  VoxelIndex center{0, 0, 0};
  ZTransform transform = ZTransform::kIdentity;
  float label = 0.0f;
  float diameter_mm = 0.0f;
};

struct SampleConfig {
  /// Negatives per positive, counting augmented copies as positives.
  double neg_pos_ratio = 10.0;
  double exclusion_mm = 16.0;
  /// Share of negatives centred on in-mask tissue (HU above tissue_hu)
  /// such as vessels and pleura; the rest are uniform over the mask.
  double tissue_fraction = 0.5;
  float tissue_hu = -400.0f;
  /// Uniform per-axis offset of positive centres, in voxels.
  long jitter_voxels = 0;
  bool augment = true;
};

struct SampleSet {
  std::vector<SampleRef> positives;
  std::vector<SampleRef> negatives;

  std::vector<SampleRef> all() const;
};

/// Nearest voxel of a world point.
VoxelIndex nearest_voxel(const Volume& volume, const WorldPoint& world);

/// In-mask centres at least `exclusion_mm` from every annotated nodule.
/// Returns fewer than `count` (with a warning) when valid locations run out.
std::vector<VoxelIndex> sample_negatives(const ScanData& scan, std::size_t count, Rng& rng,
                                         const SampleConfig& config = {});

/// Positives (each nodule plus its five augmented copies) and
/// round(neg_pos_ratio * |positives|) negatives spread over `scan_ids`.
SampleSet build_sample_set(const std::vector<ScanData>& scans, std::span<const std::size_t> scan_ids,
                           const SampleConfig& config, Rng& rng);

/// [1, e, e, e] normalized intensities covering center - e/2 .. center + e/2 - 1.
/// Out-of-volume voxels read as `outside` HU.
Array<float> extract_patch(const Volume& volume, const VoxelIndex& center, std::size_t edge,
                           float outside = 170.0f);

/// [1, e, e, e] target: 1 where the voxel lies within diameter / 2 of an
/// annotated centre, same placement as extract_patch.
Array<float> make_prn_target(const Volume& volume, std::span<const Annotation> annotations,
                             const VoxelIndex& center, std::size_t edge);

/// Reads `<id>.mhd` / `<id>_mask.mhd` pairs from a preprocessed directory and
/// attaches matching annotation rows. Pairs are sorted by series id.
std::vector<ScanData> load_scans(const std::filesystem::path& dir,
                                 const std::vector<Annotation>& annotations);

}  // namespace noduleforge
