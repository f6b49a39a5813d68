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

#include "noduleforge/train/samples.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "noduleforge/core/error.hpp"
#include "noduleforge/io/metaimage.hpp"
#include "noduleforge/preprocess/intensity.hpp"
#include "noduleforge/preprocess/lung_mask.hpp"

namespace noduleforge {

std::vector<SampleRef> SampleSet::all() const {
  std::vector<SampleRef> out = positives;
  out.insert(out.end(), negatives.begin(), negatives.end());
  return out;
}

VoxelIndex nearest_voxel(const Volume& volume, const WorldPoint& world) {
  const VoxelPoint v = world_to_voxel(volume, world);
  return {std::lround(v.z), std::lround(v.y), std::lround(v.x)};
}

namespace {

double world_distance(const WorldPoint& a, const WorldPoint& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

bool far_from_nodules(const ScanData& scan, const VoxelIndex& c, double exclusion_mm) {
  const WorldPoint w = voxel_to_world(
      scan.volume, {static_cast<double>(c[0]), static_cast<double>(c[1]), static_cast<double>(c[2])});
  for (const auto& a : scan.annotations) {
    if (world_distance(w, a.center) < exclusion_mm) return false;
  }
  return true;
}

}  // namespace

std::vector<VoxelIndex> sample_negatives(const ScanData& scan, std::size_t count, Rng& rng,
                                         const SampleConfig& config) {
  if (count == 0) return {};
  const auto& grid = scan.volume.voxels;
  require(scan.mask.extents() == grid.extents(), ErrorKind::kShapeMismatch,
          "sample_negatives: mask extents differ from volume");
  std::vector<std::size_t> any, tissue;
  for (std::size_t i = 0; i < scan.mask.size(); ++i) {
    if (!scan.mask[i]) continue;
    any.push_back(i);
    if (grid[i] > config.tissue_hu) tissue.push_back(i);
  }
  if (any.empty()) {
    spdlog::warn("sample_negatives: {} has an empty mask", scan.volume.series_id);
    return {};
  }
  const std::size_t h = grid.height(), w = grid.width();
  auto to_index = [&](std::size_t i) {
    return VoxelIndex{static_cast<long>(i / (h * w)), static_cast<long>((i / w) % h),
                      static_cast<long>(i % w)};
  };
  std::vector<VoxelIndex> out;
  const std::size_t max_attempts = 50 * count + 1000;
  for (std::size_t attempt = 0; attempt < max_attempts && out.size() < count; ++attempt) {
    const bool from_tissue = !tissue.empty() && rng.uniform() < config.tissue_fraction;
    const auto& pool = from_tissue ? tissue : any;
    const VoxelIndex c = to_index(pool[rng.below(pool.size())]);
    if (far_from_nodules(scan, c, config.exclusion_mm)) out.push_back(c);
  }
  if (out.size() < count) {
    spdlog::warn("sample_negatives: {} yielded {} of {} negatives", scan.volume.series_id,
                 out.size(), count);
  }
  return out;
}

SampleSet build_sample_set(const std::vector<ScanData>& scans, std::span<const std::size_t> scan_ids,
                           const SampleConfig& config, Rng& rng) {
  SampleSet set;
  for (std::size_t s : scan_ids) {
    const ScanData& scan = scans.at(s);
    for (const auto& a : scan.annotations) {
      VoxelIndex c = nearest_voxel(scan.volume, a.center);
      if (config.jitter_voxels > 0) {
        for (auto& v : c) {
          v += static_cast<long>(rng.below(2 * config.jitter_voxels + 1)) - config.jitter_voxels;
        }
      }
      const std::size_t copies = config.augment ? kAllTransforms.size() : 1;
      for (std::size_t t = 0; t < copies; ++t) {
        set.positives.push_back(
            {s, c, kAllTransforms[t], 1.0f, static_cast<float>(a.diameter_mm)});
      }
    }
  }
  if (scan_ids.empty()) return set;
  const auto total =
      static_cast<std::size_t>(std::llround(config.neg_pos_ratio * set.positives.size()));
  const std::size_t per_scan = total / scan_ids.size();
  const std::size_t extra = total % scan_ids.size();
  for (std::size_t k = 0; k < scan_ids.size(); ++k) {
    const std::size_t s = scan_ids[k];
    const std::size_t want = per_scan + (k < extra ? 1 : 0);
    for (const auto& c : sample_negatives(scans[s], want, rng, config)) {
      set.negatives.push_back({s, c, ZTransform::kIdentity, 0.0f, 0.0f});
    }
  }
  return set;
}

Array<float> extract_patch(const Volume& volume, const VoxelIndex& center, std::size_t edge,
                           float outside) {
  const auto& grid = volume.voxels;
  const long e = static_cast<long>(edge);
  Array<float> patch({1, edge, edge, edge});
  float* out = patch.data();
  for (long z = 0; z < e; ++z) {
    for (long y = 0; y < e; ++y) {
      for (long x = 0; x < e; ++x) {
        const long gz = center[0] - e / 2 + z;
        const long gy = center[1] - e / 2 + y;
        const long gx = center[2] - e / 2 + x;
        const float hu = grid.contains(gz, gy, gx) ? grid(gz, gy, gx) : outside;
        *out++ = normalize_hu(hu);
      }
    }
  }
  return patch;
}

Array<float> make_prn_target(const Volume& volume, std::span<const Annotation> annotations,
                             const VoxelIndex& center, std::size_t edge) {
  const long e = static_cast<long>(edge);
  Array<float> target({1, edge, edge, edge}, 0.0f);
  for (const auto& a : annotations) {
    const VoxelPoint c = world_to_voxel(volume, a.center);
    const double r = a.diameter_mm / 2.0;
    const double rz = r / volume.spacing[0], ry = r / volume.spacing[1], rx = r / volume.spacing[2];
    const long z0 = center[0] - e / 2, y0 = center[1] - e / 2, x0 = center[2] - e / 2;
    const long zlo = std::max<long>(0, static_cast<long>(std::floor(c.z - rz)) - z0);
    const long zhi = std::min<long>(e - 1, static_cast<long>(std::ceil(c.z + rz)) - z0);
    const long ylo = std::max<long>(0, static_cast<long>(std::floor(c.y - ry)) - y0);
    const long yhi = std::min<long>(e - 1, static_cast<long>(std::ceil(c.y + ry)) - y0);
    const long xlo = std::max<long>(0, static_cast<long>(std::floor(c.x - rx)) - x0);
    const long xhi = std::min<long>(e - 1, static_cast<long>(std::ceil(c.x + rx)) - x0);
    for (long z = zlo; z <= zhi; ++z) {
      for (long y = ylo; y <= yhi; ++y) {
        for (long x = xlo; x <= xhi; ++x) {
          const double dz = (z + z0 - c.z) * volume.spacing[0];
          const double dy = (y + y0 - c.y) * volume.spacing[1];
          const double dx = (x + x0 - c.x) * volume.spacing[2];
          if (dz * dz + dy * dy + dx * dx <= r * r) target[(z * e + y) * e + x] = 1.0f;
        }
      }
    }
  }
  return target;
}

std::vector<ScanData> load_scans(const std::filesystem::path& dir,
                                 const std::vector<Annotation>& annotations) {
  require(std::filesystem::is_directory(dir), ErrorKind::kMissingInput,
          "load_scans: not a directory: " + dir.string());
  std::vector<std::string> ids;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    const std::string suffix = "_mask.mhd";
    if (name.size() > suffix.size() && name.ends_with(suffix)) {
      ids.push_back(name.substr(0, name.size() - suffix.size()));
    }
  }
  std::sort(ids.begin(), ids.end());
  std::vector<ScanData> scans;
  for (const auto& id : ids) {
    ScanData scan;
    scan.volume = read_metaimage(dir / (id + ".mhd"));
    scan.mask = volume_as_mask(read_metaimage(dir / (id + "_mask.mhd")));
    require(scan.mask.extents() == scan.volume.voxels.extents(), ErrorKind::kShapeMismatch,
            "load_scans: mask of " + id + " does not match its volume");
    for (const auto& a : annotations) {
      if (a.series_id == id) scan.annotations.push_back(a);
    }
    scans.push_back(std::move(scan));
  }
  return scans;
}

}  // namespace noduleforge
