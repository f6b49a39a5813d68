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
#include <span>
#include <vector>

namespace noduleforge {

inline constexpr std::size_t kOtsuBins = 256;
inline constexpr double kOtsuLowHu = -1200.0;
inline constexpr double kOtsuHighHu = 600.0;

struct OtsuResult {
  /// Last bin of the low class.
  std::size_t bin = 0;
  /// Only one bin is populated; `bin` is that bin.
  bool degenerate = false;
};

/// Bin index of a HU value; out-of-range values land in the end bins.
std::size_t otsu_bin(float hu);
/// Upper HU edge of a bin.
double otsu_bin_upper_edge(std::size_t bin);

std::vector<std::uint64_t> hu_histogram(std::span<const float> values);

/// Threshold maximizing between-class variance, low class = bins <= result.
/// Ties resolve to the lowest bin.
OtsuResult otsu_threshold(std::span<const std::uint64_t> histogram);

}  // namespace noduleforge
