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

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "noduleforge/core/error.hpp"
#include "noduleforge/core/rng.hpp"
#include "noduleforge/phantom/phantom.hpp"
#include "noduleforge/preprocess/intensity.hpp"
#include "noduleforge/preprocess/lung_mask.hpp"
#include "noduleforge/preprocess/morphology.hpp"
#include "noduleforge/preprocess/otsu.hpp"
#include "support/oracles.hpp"
#include "noduleforge/preprocess/resample.hpp"

using namespace noduleforge;
using testing::exhaustive_otsu;

namespace {

Plane random_plane(Rng& rng, std::size_t h, std::size_t w, double density) {
  Plane p(h, w);
  for (auto& v : p.pixels) v = rng.uniform() < density;
  return p;
}

bool subset(const Plane& a, const Plane& b) {
  for (std::size_t i = 0; i < a.pixels.size(); ++i)
    if (a.pixels[i] && !b.pixels[i]) return false;
  return true;
}

Volume constant_volume(Extents3 e, float v, std::array<double, 3> spacing) {
  Volume vol;
  vol.voxels = Grid3<float>(e, v);
  vol.spacing = spacing;
  return vol;
}

}  // namespace

TEST_CASE("resample at the target spacing is the identity") {
  Rng rng(0);
  Volume v = constant_volume({5, 6, 7}, 0.0f, {1, 1, 1});
  for (auto& x : v.voxels.values()) x = static_cast<float>(rng.uniform(-1000, 500));
  v.origin = {1, 2, 3};
  Volume r = resample(v);
  CHECK(r.voxels == v.voxels);
  CHECK(r.origin == v.origin);
  CHECK(resample(r).voxels == r.voxels);
}

TEST_CASE("resample keeps constants constant") {
  Volume v = constant_volume({4, 5, 6}, -321.5f, {2.5, 0.7, 0.7});
  Volume r = resample(v);
  CHECK(r.voxels.extents() == Extents3{10, 4, 4});
  CHECK(r.spacing == std::array<double, 3>{1, 1, 1});
  for (float x : r.voxels.values()) CHECK(x == -321.5f);
}

TEST_CASE("resample of a ramp matches trilinear values") {
  Volume v = constant_volume({6, 3, 3}, 0.0f, {2, 1, 1});
  for (std::size_t z = 0; z < 6; ++z)
    for (std::size_t y = 0; y < 3; ++y)
      for (std::size_t x = 0; x < 3; ++x) v.voxels(z, y, x) = static_cast<float>(10.0 * z);
  Volume r = resample(v);
  REQUIRE(r.voxels.depth() == 12);
  for (std::size_t z = 0; z < 12; ++z) {
    // Output z samples input z / 2, clamped to the last input slice.
    const double expected = 10.0 * std::min(z / 2.0, 5.0);
    CHECK(std::abs(r.voxels(z, 1, 1) - expected) <= 1e-6);
  }
}

TEST_CASE("resample does not overshoot") {
  Rng rng(1);
  Volume v = constant_volume({5, 7, 6}, 0.0f, {1.7, 0.6, 0.8});
  for (auto& x : v.voxels.values()) x = static_cast<float>(rng.uniform(-1000, 1000));
  const auto [lo, hi] = std::minmax_element(v.voxels.values().begin(), v.voxels.values().end());
  Volume r = resample(v);
  for (float x : r.voxels.values()) {
    CHECK(x >= *lo);
    CHECK(x <= *hi);
  }
}

TEST_CASE("resample rejects degenerate axes") {
  Volume v = constant_volume({1, 4, 4}, 0.0f, {1, 1, 1});
  CHECK_THROWS_AS(resample(v), Error);
  Volume bad = constant_volume({4, 4, 4}, 0.0f, {1, -1, 1});
  CHECK_THROWS_AS(resample(bad), Error);
}

TEST_CASE("otsu binning") {
  CHECK(otsu_bin(-5000.0f) == 0);
  CHECK(otsu_bin(-1200.0f) == 0);
  CHECK(otsu_bin(5000.0f) == kOtsuBins - 1);
  CHECK(otsu_bin_upper_edge(kOtsuBins - 1) == doctest::Approx(kOtsuHighHu));
  std::vector<float> values{-1000.0f, 0.0f, 0.0f};
  auto h = hu_histogram(values);
  CHECK(h[otsu_bin(0.0f)] == 2);
}

TEST_CASE("otsu separates two spikes") {
  std::vector<std::uint64_t> h(kOtsuBins, 0);
  const std::size_t air = otsu_bin(-1000.0f), tissue = otsu_bin(0.0f);
  h[air] = 300;
  h[tissue] = 700;
  auto r = otsu_threshold(h);
  CHECK_FALSE(r.degenerate);
  CHECK(r.bin >= air);
  CHECK(r.bin < tissue);
  CHECK(r.bin == exhaustive_otsu(h));
  CHECK(r.bin == air);  // ties resolve to the lowest bin
}

TEST_CASE("otsu flags constant slices") {
  std::vector<std::uint64_t> h(kOtsuBins, 0);
  h[42] = 1000;
  auto r = otsu_threshold(h);
  CHECK(r.degenerate);
  CHECK(r.bin == 42);
}

TEST_CASE("otsu matches an exhaustive scan") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::uint64_t> h(kOtsuBins, 0);
    const double density = rng.uniform(0.02, 1.0);
    for (auto& c : h)
      if (rng.uniform() < density) c = rng.below(100);
    h[rng.below(kOtsuBins)] += 1;
    h[rng.below(kOtsuBins)] += 1;
    std::size_t populated = 0;
    for (auto c : h) populated += c != 0;
    if (populated < 2) continue;
    CHECK(otsu_threshold(h).bin == exhaustive_otsu(h));
  }
}

TEST_CASE("dilating a single pixel gives a disk") {
  Plane p(21, 21);
  p.at(10, 10) = 1;
  Plane d = dilate_disk(p, kDilationRadius);
  std::size_t count = 0;
  for (int y = 0; y < 21; ++y)
    for (int x = 0; x < 21; ++x) {
      const bool inside = (y - 10) * (y - 10) + (x - 10) * (x - 10) <= 25;
      CHECK(d.at(y, x) == inside);
      count += d.at(y, x);
    }
  CHECK(count == 81);
}

TEST_CASE("morphology properties on random planes") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t h = 10 + rng.below(30), w = 10 + rng.below(30);
    Plane a = random_plane(rng, h, w, rng.uniform(0.05, 0.6));
    Plane b = a;
    for (auto& v : b.pixels) v = v || rng.uniform() < 0.1;
    for (int r : {1, 2, 5}) {
      CHECK(subset(a, dilate_disk(a, r)));
      CHECK(subset(erode_disk(a, r), a));
      CHECK(subset(dilate_disk(a, r), dilate_disk(b, r)));
      const Plane c = close_disk(a, r);
      CHECK(subset(a, c));
      CHECK(close_disk(c, r) == c);
      CHECK(subset(c, close_disk(b, r)));
    }
    Plane f = fill_holes(a);
    CHECK(subset(a, f));
    CHECK(fill_holes(f) == f);
    Plane nb = remove_border_components(a);
    CHECK(subset(nb, a));
    for (std::size_t x = 0; x < w; ++x) {
      CHECK(nb.at(0, x) == 0);
      CHECK(nb.at(h - 1, x) == 0);
    }
  }
}

TEST_CASE("hole filling and border removal examples") {
  Plane ring(7, 7);
  for (std::size_t i = 1; i < 6; ++i) ring.at(1, i) = ring.at(5, i) = ring.at(i, 1) = ring.at(i, 5) = 1;
  Plane filled = fill_holes(ring);
  for (std::size_t y = 1; y < 6; ++y)
    for (std::size_t x = 1; x < 6; ++x) CHECK(filled.at(y, x) == 1);
  CHECK(filled.at(0, 0) == 0);
  CHECK(remove_border_components(ring) == ring);
  Plane edge = ring;
  edge.at(0, 3) = 1;
  CHECK(remove_border_components(edge) == Plane(7, 7));
}

TEST_CASE("all-air volume yields an empty mask") {
  Volume v = constant_volume({4, 32, 32}, kAirHu, {1, 1, 1});
  Mask3 m = segment_lung(v);
  for (auto x : m.values()) CHECK(x == 0);
}

TEST_CASE("lung mask covers the phantom lungs") {
  PhantomSpec spec;
  spec.seed = 11;
  Phantom p = generate_phantom(spec, "cover");
  LungMaskStats stats;
  Mask3 mask = segment_lung(p.volume, 1, &stats);
  std::size_t lung = 0, covered = 0;
  const auto& g = p.volume.voxels;
  for (std::size_t z = 0; z < g.depth(); ++z)
    for (std::size_t y = 0; y < g.height(); ++y)
      for (std::size_t x = 0; x < g.width(); ++x) {
        const std::array<double, 3> pos{z * spec.spacing[0], y * spec.spacing[1], x * spec.spacing[2]};
        if (p.lungs[0].level(pos) < 1.0 || p.lungs[1].level(pos) < 1.0) {
          ++lung;
          covered += mask(z, y, x);
        }
      }
  REQUIRE(lung > 0);
  CHECK(static_cast<double>(covered) / lung >= 0.99);
  CHECK(stats.foreground_voxels < g.size() / 2);
}

TEST_CASE("apply_mask") {
  Rng rng(5);
  Volume v = constant_volume({3, 4, 5}, 0.0f, {1, 1, 1});
  for (auto& x : v.voxels.values()) x = static_cast<float>(rng.uniform(-1000, 100));
  CHECK(apply_mask(v, Mask3(v.voxels.extents(), 1)).voxels == v.voxels);
  const Volume padded = apply_mask(v, Mask3(v.voxels.extents(), 0));
  for (float x : padded.voxels.values()) CHECK(x == kMaskPadHu);
  Mask3 m(v.voxels.extents());
  for (auto& x : m.values()) x = rng.uniform() < 0.5;
  Volume out = apply_mask(v, m);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(out.voxels[i] == (m[i] ? v.voxels[i] : kMaskPadHu));
  CHECK_THROWS_AS(apply_mask(v, Mask3({3, 4, 4})), Error);
}

TEST_CASE("mask volume conversion round-trips") {
  Volume like = constant_volume({2, 3, 4}, 0.0f, {1, 1, 1});
  Mask3 m(like.voxels.extents());
  m[5] = 1;
  CHECK(volume_as_mask(mask_as_volume(like, m)) == m);
}

TEST_CASE("intensity normalization") {
  CHECK(normalize_hu(0.0f) == 0.0f);
  CHECK(normalize_hu(-5000.0f) == doctest::Approx(-1.2f));
  CHECK(normalize_hu(5000.0f) == doctest::Approx(0.6f));
}
