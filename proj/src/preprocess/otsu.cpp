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

#include "noduleforge/preprocess/otsu.hpp"

#include <cmath>

#include "noduleforge/core/error.hpp"

namespace noduleforge {

namespace {
constexpr double kBinWidth = (kOtsuHighHu - kOtsuLowHu) / static_cast<double>(kOtsuBins);
}

std::size_t otsu_bin(float hu) {
  const double pos = (static_cast<double>(hu) - kOtsuLowHu) / kBinWidth;
  if (!(pos > 0.0)) return 0;
  if (pos >= static_cast<double>(kOtsuBins)) return kOtsuBins - 1;
  return static_cast<std::size_t>(pos);
}

double otsu_bin_upper_edge(std::size_t bin) {
  return kOtsuLowHu + static_cast<double>(bin + 1) * kBinWidth;
}

std::vector<std::uint64_t> hu_histogram(std::span<const float> values) {
  std::vector<std::uint64_t> histogram(kOtsuBins, 0);
  for (float v : values) ++histogram[otsu_bin(v)];
  return histogram;
}

OtsuResult otsu_threshold(std::span<const std::uint64_t> histogram) {
  require(!histogram.empty(), ErrorKind::kInvalidArgument, "otsu: empty histogram");
  std::size_t populated = 0;
  std::size_t last_populated = 0;
  double total = 0.0;
  double total_sum = 0.0;
  for (std::size_t i = 0; i < histogram.size(); ++i) {
    if (histogram[i] == 0) continue;
    ++populated;
    last_populated = i;
    total += static_cast<double>(histogram[i]);
    total_sum += static_cast<double>(i) * static_cast<double>(histogram[i]);
  }
  if (populated <= 1) return {last_populated, true};

  OtsuResult best;
  double best_score = -1.0;
  double w0 = 0.0;
  double sum0 = 0.0;
  for (std::size_t t = 0; t + 1 < histogram.size(); ++t) {
    w0 += static_cast<double>(histogram[t]);
    sum0 += static_cast<double>(t) * static_cast<double>(histogram[t]);
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double diff = sum0 / w0 - (total_sum - sum0) / w1;
    const double score = w0 * w1 * diff * diff;
    if (score > best_score) {
      best_score = score;
      best.bin = t;
    }
  }
  return best;
}

}  // namespace noduleforge
