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
#include <span>
#include <string>

#include "noduleforge/io/volume.hpp"
#include "noduleforge/model/graph.hpp"

namespace noduleforge {

inline constexpr std::array<std::size_t, 3> kConcentricSizes{32, 24, 16};

struct HsnConfig {
  std::array<std::size_t, 4> growth{32, 64, 96, 128};
  /// Edge of each of the three (padded) input patches.
  std::size_t patch = 32;
  double dropout = 0.5;

  static HsnConfig full() { return {}; }
  static HsnConfig tiny(std::size_t patch = 32) { return {{2, 4, 6, 8}, patch, 0.5}; }
  void validate() const;
};

/// Three inputs [1, P, P, P] (large, medium, small crop). Outputs, in order:
/// probability [1, 1, 1, 1] after sigmoid and diameter [1, 1, 1, 1] in mm.
template <typename T>
ModelGraph<T> build_hsn(const HsnConfig& config);

std::size_t hsn_parameter_count(const HsnConfig& config);

/// Mean over the batch of bce(p, label) + label * |d - diameter|. Positives
/// must carry a finite positive diameter.
template <typename T>
Tensor<T> hsn_loss(const Tensor<T>& probability, const Tensor<T>& diameter,
                   std::span<const T> labels, std::span<const T> diameters_mm);

/// Concentric crops around a candidate, each [1, 32, 32, 32]. Out-of-volume
/// voxels take `outside`; the 24^3 and 16^3 crops sit in a zero shell.
struct ConcentricPatches {
  std::array<Array<float>, 3> patches;
};

ConcentricPatches crop_concentric(const Volume& volume, const WorldPoint& center,
                                  float outside = 170.0f);

}  // namespace noduleforge
