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
#include <cstdint>
#include <vector>

#include "noduleforge/io/volume.hpp"

namespace noduleforge {

/// Labels 26-connected foreground components in raster order of their first
/// voxel. Background is 0; components are numbered from 1.
struct ComponentLabels {
  Grid3<std::uint32_t> labels;
  std::size_t count = 0;
};

ComponentLabels label_components(const Mask3& mask);

struct Component {
  std::size_t voxels = 0;
  /// Value-weighted centroid in voxel coordinates.
  VoxelPoint centroid;
  float max_value = 0.0f;
  /// (6 V / pi)^(1/3) in voxels.
  double equivalent_diameter = 0.0;
};

/// Components of (map >= threshold) with at least `min_voxels` voxels.
std::vector<Component> threshold_components(const Grid3<float>& map, float threshold,
                                            std::size_t min_voxels = 2);

}  // namespace noduleforge
