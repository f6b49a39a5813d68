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

#include "noduleforge/preprocess/morphology.hpp"

#include <cmath>

namespace noduleforge {
namespace {

// Row r of `plane` dilated horizontally by half-width w, written to `out`.
void dilate_row(const std::uint8_t* row, std::size_t width, int w, std::uint8_t* out,
                std::vector<std::size_t>& prefix) {
  prefix.assign(width + 1, 0);
  for (std::size_t x = 0; x < width; ++x) prefix[x + 1] = prefix[x] + row[x];
  for (std::size_t x = 0; x < width; ++x) {
    const std::size_t lo = x >= static_cast<std::size_t>(w) ? x - w : 0;
    const std::size_t hi = std::min(width, x + w + 1);
    out[x] = prefix[hi] - prefix[lo] > 0 ? 1 : 0;
  }
}

Plane invert(const Plane& plane) {
  Plane out = plane;
  for (auto& p : out.pixels) p = p ? 0 : 1;
  return out;
}

}  // namespace

Plane dilate_disk(const Plane& plane, int radius) {
  if (radius <= 0 || plane.pixels.empty()) return plane;
  const std::size_t h = plane.height;
  const std::size_t w = plane.width;
  // A disk is a stack of horizontal runs; dilate rows once per run width.
  std::vector<int> half_width(radius + 1);
  for (int dy = 0; dy <= radius; ++dy) {
    half_width[dy] = static_cast<int>(std::floor(std::sqrt(double(radius * radius - dy * dy))));
  }
  std::vector<Plane> runs(radius + 1);
  std::vector<std::size_t> prefix;
  for (int dy = 0; dy <= radius; ++dy) {
    bool reused = false;
    for (int prev = 0; prev < dy; ++prev) {
      if (half_width[prev] == half_width[dy]) {
        runs[dy] = runs[prev];
        reused = true;
        break;
      }
    }
    if (reused) continue;
    runs[dy] = Plane(h, w);
    for (std::size_t y = 0; y < h; ++y) {
      dilate_row(&plane.pixels[y * w], w, half_width[dy], &runs[dy].pixels[y * w], prefix);
    }
  }
  Plane out(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    std::uint8_t* dst = &out.pixels[y * w];
    for (int dy = -radius; dy <= radius; ++dy) {
      const long sy = static_cast<long>(y) + dy;
      if (sy < 0 || sy >= static_cast<long>(h)) continue;
      const std::uint8_t* src = &runs[std::abs(dy)].pixels[sy * w];
      for (std::size_t x = 0; x < w; ++x) dst[x] |= src[x];
    }
  }
  return out;
}

Plane erode_disk(const Plane& plane, int radius) {
  return invert(dilate_disk(invert(plane), radius));
}

Plane close_disk(const Plane& plane, int radius) {
  if (radius <= 0) return plane;
  const std::size_t r = static_cast<std::size_t>(radius);
  Plane padded(plane.height + 2 * r, plane.width + 2 * r);
  for (std::size_t y = 0; y < plane.height; ++y) {
    for (std::size_t x = 0; x < plane.width; ++x) padded.at(y + r, x + r) = plane.at(y, x);
  }
  const Plane closed = erode_disk(dilate_disk(padded, radius), radius);
  Plane out(plane.height, plane.width);
  for (std::size_t y = 0; y < plane.height; ++y) {
    for (std::size_t x = 0; x < plane.width; ++x) out.at(y, x) = closed.at(y + r, x + r);
  }
  return out;
}

Plane fill_holes(const Plane& plane) {
  const Plane outside = remove_border_components(invert(plane));
  Plane out = plane;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] |= outside.pixels[i];
  return out;
}

Plane remove_border_components(const Plane& plane) {
  Plane out = plane;
  const std::size_t h = plane.height;
  const std::size_t w = plane.width;
  std::vector<std::size_t> stack;
  auto seed = [&](std::size_t y, std::size_t x) {
    if (out.at(y, x)) {
      out.at(y, x) = 0;
      stack.push_back(y * w + x);
    }
  };
  for (std::size_t x = 0; x < w; ++x) {
    seed(0, x);
    seed(h - 1, x);
  }
  for (std::size_t y = 0; y < h; ++y) {
    seed(y, 0);
    seed(y, w - 1);
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const std::size_t y = i / w;
    const std::size_t x = i % w;
    if (y > 0) seed(y - 1, x);
    if (y + 1 < h) seed(y + 1, x);
    if (x > 0) seed(y, x - 1);
    if (x + 1 < w) seed(y, x + 1);
  }
  return out;
}

}  // namespace noduleforge
