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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "noduleforge/io/tables.hpp"
#include "noduleforge/io/volume.hpp"

namespace noduleforge {

inline constexpr float kAirHu = -1000.0f;
inline constexpr float kBodyHu = 40.0f;
inline constexpr float kLungHu = -850.0f;
inline constexpr float kVesselHu = 0.0f;
inline constexpr float kNoduleHu = 20.0f;

struct PhantomSpec {
  Extents3 extents{96, 96, 96};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::size_t min_nodules = 1;
  std::size_t max_nodules = 3;
  double min_diameter_mm = 4.0;
  double max_diameter_mm = 20.0;
  std::size_t n_vessels = 6;
  double noise_sigma_hu = 20.0;
  /// Width of the logistic nodule edge in mm.
  double edge_mm = 0.4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Ellipsoid {
  std::array<double, 3> center_mm;  // (z, y, x) relative to voxel (0,0,0)
  std::array<double, 3> semi_axes_mm;

  /// Normalized radius; < 1 inside.
  double level(const std::array<double, 3>& p) const;
};

struct Phantom {
  Volume volume;
  std::vector<Annotation> annotations;
  std::array<Ellipsoid, 2> lungs;
};

/// Fully determined by spec (including seed).
Phantom generate_phantom(const PhantomSpec& spec, const std::string& series_id);

struct SuiteEntry {
  std::string series_id;
  std::filesystem::path path;
  std::uint64_t seed = 0;
  std::size_t n_nodules = 0;
};

inline constexpr const char* kManifestHeader = "seriesuid,path,seed,n_nodules";

/// Writes `phantom_NNNN.mhd/.raw`, `annotations.csv` and `manifest.csv` into
/// `out_dir`. Volume i uses derive_seed(seed, i).
std::vector<SuiteEntry> generate_suite(std::size_t n_volumes, const PhantomSpec& spec,
                                       std::uint64_t seed, const std::filesystem::path& out_dir,
                                       std::size_t workers = 1);

std::vector<SuiteEntry> read_manifest(const std::filesystem::path& path);

}  // namespace noduleforge
