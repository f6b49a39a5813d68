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

#include <algorithm>
#include <span>

namespace noduleforge {

/// Network input scaling: HU clipped to [-1200, 600], divided by 1000.
/// Zero maps to zero, so zero padding stays neutral.
inline float normalize_hu(float hu) { return std::clamp(hu, -1200.0f, 600.0f) / 1000.0f; }

inline void normalize_hu(std::span<float> values) {
  for (auto& v : values) v = normalize_hu(v);
}

}  // namespace noduleforge
