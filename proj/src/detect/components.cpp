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

#include "noduleforge/detect/components.hpp"

#include <cmath>
#include <numbers>

namespace noduleforge {

ComponentLabels label_components(const Mask3& mask) {
  ComponentLabels out{Grid3<std::uint32_t>(mask.extents(), 0), 0};
  const long d = static_cast<long>(mask.depth());
  const long h = static_cast<long>(mask.height());
  const long w = static_cast<long>(mask.width());
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || out.labels[start]) continue;
    const auto label = static_cast<std::uint32_t>(++out.count);
    out.labels[start] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const long z = static_cast<long>(i) / (h * w);
      const long y = (static_cast<long>(i) / w) % h;
      const long x = static_cast<long>(i) % w;
      for (long dz = -1; dz <= 1; ++dz) {
        const long nz = z + dz;
        if (nz < 0 || nz >= d) continue;
        for (long dy = -1; dy <= 1; ++dy) {
          const long ny = y + dy;
          if (ny < 0 || ny >= h) continue;
          for (long dx = -1; dx <= 1; ++dx) {
            const long nx = x + dx;
            if (nx < 0 || nx >= w) continue;
            const std::size_t j = static_cast<std::size_t>((nz * h + ny) * w + nx);
            if (mask[j] && !out.labels[j]) {
              out.labels[j] = label;
              stack.push_back(j);
            }
          }
        }
      }
    }
  }
  return out;
}

std::vector<Component> threshold_components(const Grid3<float>& map, float threshold,
                                            std::size_t min_voxels) {
  Mask3 binary(map.extents(), 0);
  for (std::size_t i = 0; i < map.size(); ++i) binary[i] = map[i] >= threshold;
  const ComponentLabels cc = label_components(binary);

  struct Accumulator {
    std::size_t voxels = 0;
    double weight = 0, z = 0, y = 0, x = 0;
    double uz = 0, uy = 0, ux = 0;
    float max_value = 0;
  };
  std::vector<Accumulator> acc(cc.count);
  const std::size_t h = map.height(), w = map.width();
  for (std::size_t i = 0; i < map.size(); ++i) {
    const std::uint32_t label = cc.labels[i];
    if (!label) continue;
    Accumulator& a = acc[label - 1];
    const double v = map[i];
    a.voxels += 1;
    a.weight += v;
    a.z += v * static_cast<double>(i / (h * w));
    a.y += v * static_cast<double>((i / w) % h);
    a.x += v * static_cast<double>(i % w);
    a.uz += static_cast<double>(i / (h * w));
    a.uy += static_cast<double>((i / w) % h);
    a.ux += static_cast<double>(i % w);
    a.max_value = std::max(a.max_value, map[i]);
  }
  std::vector<Component> out;
  for (const Accumulator& a : acc) {
    if (a.voxels < min_voxels) continue;
    Component c;
    c.voxels = a.voxels;
    if (a.weight > 0.0) {
      c.centroid = {a.z / a.weight, a.y / a.weight, a.x / a.weight};
    } else {
      const double n = static_cast<double>(a.voxels);
      c.centroid = {a.uz / n, a.uy / n, a.ux / n};
    }
    c.max_value = a.max_value;
    c.equivalent_diameter = std::cbrt(6.0 * static_cast<double>(a.voxels) / std::numbers::pi);
    out.push_back(c);
  }
  return out;
}

}  // namespace noduleforge
