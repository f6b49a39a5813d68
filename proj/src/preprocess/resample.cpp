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

#include "noduleforge/preprocess/resample.hpp"

#include <cmath>
#include <vector>

#include "noduleforge/core/error.hpp"

namespace noduleforge {
namespace {

struct AxisTable {
  std::vector<std::size_t> lo;
  std::vector<std::size_t> hi;
  std::vector<float> t;
};

AxisTable axis_table(std::size_t in_extent, std::size_t out_extent, double ratio) {
  AxisTable table;
  table.lo.resize(out_extent);
  table.hi.resize(out_extent);
  table.t.resize(out_extent);
  for (std::size_t i = 0; i < out_extent; ++i) {
    const double pos = static_cast<double>(i) * ratio;
    auto lo = static_cast<std::size_t>(std::floor(pos));
    double t = pos - static_cast<double>(lo);
    if (lo >= in_extent - 1) {
      lo = in_extent - 1;
      t = 0.0;
    }
    table.lo[i] = lo;
    table.hi[i] = std::min(lo + 1, in_extent - 1);
    table.t[i] = static_cast<float>(t);
  }
  return table;
}

inline float lerp(float a, float b, float t) { return a + t * (b - a); }

}  // namespace

Volume resample(const Volume& volume, std::array<double, 3> target_spacing) {
  validate_geometry(volume);
  static constexpr const char* kAxes[3] = {"z", "y", "x"};
  Extents3 out_extents{};
  AxisTable tables[3];
  for (int a = 0; a < 3; ++a) {
    const std::size_t n = volume.voxels.extents()[a];
    require(n >= 2, ErrorKind::kInvalidArgument,
            std::string("resample: degenerate extent along ") + kAxes[a]);
    require(target_spacing[a] > 0.0, ErrorKind::kInvalidArgument,
            "resample: target spacing must be positive");
    const double scaled = static_cast<double>(n) * volume.spacing[a] / target_spacing[a];
    out_extents[a] = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(scaled)));
    tables[a] = axis_table(n, out_extents[a], target_spacing[a] / volume.spacing[a]);
  }

  Grid3<float> out(out_extents);
  const auto& in = volume.voxels;
  const auto& tz = tables[0];
  const auto& ty = tables[1];
  const auto& tx = tables[2];
  for (std::size_t z = 0; z < out_extents[0]; ++z) {
    for (std::size_t y = 0; y < out_extents[1]; ++y) {
      const float* r00 = &in(tz.lo[z], ty.lo[y], 0);
      const float* r01 = &in(tz.lo[z], ty.hi[y], 0);
      const float* r10 = &in(tz.hi[z], ty.lo[y], 0);
      const float* r11 = &in(tz.hi[z], ty.hi[y], 0);
      float* dst = &out(z, y, 0);
      for (std::size_t x = 0; x < out_extents[2]; ++x) {
        const std::size_t x0 = tx.lo[x];
        const std::size_t x1 = tx.hi[x];
        const float t = tx.t[x];
        const float c00 = lerp(r00[x0], r00[x1], t);
        const float c01 = lerp(r01[x0], r01[x1], t);
        const float c10 = lerp(r10[x0], r10[x1], t);
        const float c11 = lerp(r11[x0], r11[x1], t);
        const float c0 = lerp(c00, c01, ty.t[y]);
        const float c1 = lerp(c10, c11, ty.t[y]);
        dst[x] = lerp(c0, c1, tz.t[z]);
      }
    }
  }
  Volume result = with_voxels(volume, std::move(out));
  result.spacing = target_spacing;
  return result;
}

}  // namespace noduleforge
