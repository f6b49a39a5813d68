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

#include "noduleforge/io/volume.hpp"

#include "noduleforge/core/error.hpp"

namespace noduleforge {

void validate_geometry(const Volume& volume) {
  static constexpr const char* kAxes[3] = {"z", "y", "x"};
  for (int a = 0; a < 3; ++a) {
    require(volume.spacing[a] > 0.0, ErrorKind::kInvalidArgument,
            std::string("volume: spacing along ") + kAxes[a] + " must be positive");
  }
}

VoxelPoint world_to_voxel(const Volume& volume, const WorldPoint& world) {
  return {(world.z - volume.origin[0]) / volume.spacing[0],
          (world.y - volume.origin[1]) / volume.spacing[1],
          (world.x - volume.origin[2]) / volume.spacing[2]};
}

WorldPoint voxel_to_world(const Volume& volume, const VoxelPoint& voxel) {
  return {volume.origin[2] + voxel.x * volume.spacing[2],
          volume.origin[1] + voxel.y * volume.spacing[1],
          volume.origin[0] + voxel.z * volume.spacing[0]};
}

Volume with_voxels(const Volume& like, Grid3<float> voxels) {
  Volume out;
  out.voxels = std::move(voxels);
  out.spacing = like.spacing;
  out.origin = like.origin;
  out.series_id = like.series_id;
  return out;
}

}  // namespace noduleforge
