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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace noduleforge {

/// Grid extents in storage order (z, y, x).
using Extents3 = std::array<std::size_t, 3>;

/// Dense slice-major 3-D grid.
template <typename T>
class Grid3 {
 public:
  Grid3() = default;
  explicit Grid3(Extents3 extents, T fill = T{})
      : extents_(extents), values_(extents[0] * extents[1] * extents[2], fill) {}

  const Extents3& extents() const { return extents_; }
  std::size_t depth() const { return extents_[0]; }
  std::size_t height() const { return extents_[1]; }
  std::size_t width() const { return extents_[2]; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::size_t index(std::size_t z, std::size_t y, std::size_t x) const {
    return (z * extents_[1] + y) * extents_[2] + x;
  }
  bool contains(long z, long y, long x) const {
    return z >= 0 && y >= 0 && x >= 0 && static_cast<std::size_t>(z) < extents_[0] &&
           static_cast<std::size_t>(y) < extents_[1] && static_cast<std::size_t>(x) < extents_[2];
  }
  T& operator()(std::size_t z, std::size_t y, std::size_t x) { return values_[index(z, y, x)]; }
  const T& operator()(std::size_t z, std::size_t y, std::size_t x) const {
    return values_[index(z, y, x)];
  }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }
  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }

  bool operator==(const Grid3& other) const = default;

 private:
  Extents3 extents_{0, 0, 0};
  std::vector<T> values_;
};

using Mask3 = Grid3<std::uint8_t>;

/// World position in millimetres, (x, y, z) as in the annotation tables.
struct WorldPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Continuous voxel coordinate in storage order.
struct VoxelPoint {
  double z = 0.0;
  double y = 0.0;
  double x = 0.0;
};

/// CT volume in Hounsfield units. spacing and origin are in (z, y, x) order.
struct Volume {
  Grid3<float> voxels;
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::array<double, 3> origin{0.0, 0.0, 0.0};
  std::string series_id;
};

/// Raises unless all spacings are strictly positive.
void validate_geometry(const Volume& volume);

VoxelPoint world_to_voxel(const Volume& volume, const WorldPoint& world);
WorldPoint voxel_to_world(const Volume& volume, const VoxelPoint& voxel);

/// Same geometry with a different grid; used for masks and resampled copies.
Volume with_voxels(const Volume& like, Grid3<float> voxels);

}  // namespace noduleforge
