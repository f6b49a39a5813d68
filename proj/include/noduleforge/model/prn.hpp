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
#include <string>

#include "noduleforge/model/graph.hpp"

namespace noduleforge {

inline constexpr std::array<std::size_t, 3> kDdbKernels{3, 5, 3};
inline constexpr std::size_t kDdbDilation = 2;

/// Densely dilated block: three same-padded dilated convs (k = 3, 5, 3), each
/// consuming the concat of the block input and all earlier layer outputs.
/// Output channels = in + 3 * growth.
template <typename T>
int build_ddb(ModelGraph<T>& g, const std::string& prefix, int in, std::size_t growth);

/// BN, 3^3 conv + ReLU, 2^3 max-pool. Rejects odd spatial extents.
template <typename T>
int build_transition_down(ModelGraph<T>& g, const std::string& prefix, int in,
                          std::size_t out_channels);

struct PrnConfig {
  std::array<std::size_t, 4> growth{32, 48, 64, 80};
  /// Edge of the cubic input patch; the enlarged path sees twice this.
  std::size_t patch = 32;

  static PrnConfig full() { return {}; }
  /// Reduced schedule for tests and desk-scale runs.
  static PrnConfig tiny(std::size_t patch = 16) { return {{2, 3, 4, 5}, patch}; }
  void validate() const;
};

/// Single input [1, P, P, P]; single output [1, P, P, P] in (0, 1).
template <typename T>
ModelGraph<T> build_prn(const PrnConfig& config);

/// Parameter count implied by the channel trace, computed without building.
std::size_t prn_parameter_count(const PrnConfig& config);

}  // namespace noduleforge
