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
#include <vector>

namespace noduleforge {

/// Binary 2-D image, row-major, values 0 or 1.
struct Plane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;

  Plane() = default;
  Plane(std::size_t h, std::size_t w, std::uint8_t fill = 0)
      : height(h), width(w), pixels(h * w, fill) {}
  std::uint8_t& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
  bool operator==(const Plane&) const = default;
};

/// Disk offsets with dy*dy + dx*dx <= radius*radius. Pixels outside the
/// plane are treated as background.
Plane dilate_disk(const Plane& plane, int radius);
Plane erode_disk(const Plane& plane, int radius);
/// Dilation then erosion on a plane padded by `radius`, so the result does
/// not depend on the plane border.
Plane close_disk(const Plane& plane, int radius);

/// Sets background pixels not 4-connected to the plane border.
Plane fill_holes(const Plane& plane);

/// Clears 4-connected foreground components that touch the plane border.
Plane remove_border_components(const Plane& plane);

}  // namespace noduleforge
