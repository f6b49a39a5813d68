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

#include "noduleforge/io/volume.hpp"

namespace noduleforge {

/// Trilinear resampling onto a grid with `target_spacing` (z, y, x) mm.
/// New extent per axis is round(extent * spacing / target). Output voxel i
/// samples input position i * target / spacing, clamped to the last voxel.
/// Origin is preserved.
Volume resample(const Volume& volume, std::array<double, 3> target_spacing = {1.0, 1.0, 1.0});

}  // namespace noduleforge
