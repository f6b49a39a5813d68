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

#include "noduleforge/train/augment.hpp"

#include <cstdint>

#include "noduleforge/core/error.hpp"

namespace noduleforge {
namespace {

// Source (y, x) feeding destination (y, x) for each transform.
inline void source_of(ZTransform t, std::size_t n, std::size_t y, std::size_t x, std::size_t& sy,
                      std::size_t& sx) {
  const std::size_t m = n - 1;
  switch (t) {
    case ZTransform::kIdentity: sy = y; sx = x; return;
    case ZTransform::kRot90: sy = m - x; sx = y; return;
    case ZTransform::kRot180: sy = m - y; sx = m - x; return;
    case ZTransform::kRot270: sy = x; sx = m - y; return;
    case ZTransform::kFlip: sy = y; sx = m - x; return;
    case ZTransform::kFlipRot90: sy = x; sx = y; return;
  }
}

}  // namespace

template <typename T>
Array<T> apply_transform(const Array<T>& patch, ZTransform t) {
  const Shape& s = patch.shape();
  require(s.size() >= 3, ErrorKind::kShapeMismatch, "augment: patch rank must be at least 3");
  const std::size_t h = s[s.size() - 2];
  const std::size_t w = s[s.size() - 1];
  require(h == w, ErrorKind::kShapeMismatch, "augment: planes must be square");
  if (t == ZTransform::kIdentity) return patch;
  const std::size_t planes = patch.size() / (h * w);
  Array<T> out(s);
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = patch.data() + p * h * w;
    T* dst = out.data() + p * h * w;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        std::size_t sy = y, sx = x;
        source_of(t, w, y, x, sy, sx);
        dst[y * w + x] = src[sy * w + sx];
      }
    }
  }
  return out;
}

template <typename T>
std::array<Array<T>, 5> augment(const Array<T>& patch) {
  std::array<Array<T>, 5> copies;
  for (std::size_t i = 0; i < kAugmentations.size(); ++i) {
    copies[i] = apply_transform(patch, kAugmentations[i]);
  }
  return copies;
}

template Array<float> apply_transform(const Array<float>&, ZTransform);
template Array<double> apply_transform(const Array<double>&, ZTransform);
template Array<std::uint8_t> apply_transform(const Array<std::uint8_t>&, ZTransform);
template std::array<Array<float>, 5> augment(const Array<float>&);
template std::array<Array<double>, 5> augment(const Array<double>&);

}  // namespace noduleforge
