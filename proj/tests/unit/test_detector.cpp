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
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "noduleforge/core/error.hpp"
#include "noduleforge/detect/components.hpp"
#include "noduleforge/detect/detector.hpp"
#include "noduleforge/io/tables.hpp"
#include "noduleforge/model/hsn.hpp"
#include "noduleforge/model/prn.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace noduleforge;
using testing::flood_fill_labels;

namespace {

Volume flat_volume(Extents3 e, float hu = -850.0f) {
  Volume v;
  v.voxels = Grid3<float>(e, hu);
  v.series_id = "scan";
  return v;
}

ModelGraph<float> tiny_prn(std::uint64_t seed, bool zero_head) {
  auto g = build_prn<float>(PrnConfig::tiny(16));
  Rng rng(seed);
  g.initialize(rng, InitScheme::kHe);
  if (zero_head) {
    for (const char* name : {"head.weight", "head.bias"}) {
      auto& a = g.parameter(name).mutable_array();
      std::fill(a.data(), a.data() + a.size(), 0.0f);
    }
  }
  return g;
}

void fill_cube(Grid3<float>& g, std::size_t z0, std::size_t y0, std::size_t x0, std::size_t edge,
               float value) {
  for (std::size_t z = z0; z < z0 + edge; ++z)
    for (std::size_t y = y0; y < y0 + edge; ++y)
      for (std::size_t x = x0; x < x0 + edge; ++x) g(z, y, x) = value;
}

}  // namespace

TEST_CASE("window starts cover the extent") {
  CHECK(window_starts(96, 32, 32) == std::vector<std::size_t>{0, 32, 64});
  CHECK(window_starts(96, 32, 16) == std::vector<std::size_t>{0, 16, 32, 48, 64});
  CHECK(window_starts(100, 32, 32) == std::vector<std::size_t>{0, 32, 64, 68});
  CHECK(window_starts(20, 32, 32) == std::vector<std::size_t>{0});
  for (std::size_t extent : {33u, 50u, 64u, 97u, 130u}) {
    const auto s = window_starts(extent, 32, 12);
    CHECK(s.front() == 0);
    CHECK(s.back() + 32 == extent);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] - s[i - 1] <= 12);
  }
}

TEST_CASE("detector config validation") {
  DetectorConfig c;
  CHECK_NOTHROW(c.validate());
  c.stride = 64;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.threshold = 1.0f;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.window_batch = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("zero head weights give one half inside the mask") {
  const auto prn = tiny_prn(0, true);
  const Volume v = flat_volume({32, 32, 32});
  Mask3 mask(v.voxels.extents(), 0);
  for (std::size_t z = 4; z < 28; ++z)
    for (std::size_t y = 4; y < 28; ++y)
      for (std::size_t x = 4; x < 28; ++x) mask(z, y, x) = 1;
  DetectorConfig c;
  c.patch = 16;
  c.stride = 16;
  const auto map = sliding_window_prn(v, mask, prn, c);
  for (std::size_t i = 0; i < map.size(); ++i) CHECK(map[i] == (mask[i] ? 0.5f : 0.0f));

  const auto empty = sliding_window_prn(v, Mask3(v.voxels.extents(), 0), prn, c);
  CHECK(std::all_of(empty.values().begin(), empty.values().end(),
                    [](float m) { return m == 0.0f; }));
}

TEST_CASE("stride does not change singly covered voxels") {
  const auto prn = tiny_prn(3, false);
  Volume v = flat_volume({32, 32, 32});
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<float> hu(-1000.0f, 200.0f);
  for (float& x : v.voxels.values()) x = hu(gen);
  const Mask3 mask(v.voxels.extents(), 1);
  DetectorConfig coarse, fine;
  coarse.patch = fine.patch = 16;
  coarse.stride = 16;
  fine.stride = 8;
  const auto a = sliding_window_prn(v, mask, prn, coarse);
  const auto b = sliding_window_prn(v, mask, prn, fine);
  for (std::size_t z = 0; z < 8; ++z)
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t x = 0; x < 8; ++x) CHECK(a(z, y, x) == b(z, y, x));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] >= 0.0f);
  CHECK(sliding_window_prn(v, mask, prn, fine) == b);
}

TEST_CASE("candidate extraction from a probability map") {
  Volume v = flat_volume({32, 32, 32});
  v.spacing = {2.0, 1.0, 0.5};
  v.origin = {10.0, 20.0, 30.0};
  Grid3<float> map(v.voxels.extents(), 0.0f);
  CHECK(extract_candidates(v, map, 0.8f).empty());

  fill_cube(map, 10, 12, 14, 4, 1.0f);
  auto c = extract_candidates(v, map, 0.8f);
  REQUIRE(c.size() == 1);
  CHECK(c[0].voxel.z == doctest::Approx(11.5));
  CHECK(c[0].voxel.y == doctest::Approx(13.5));
  CHECK(c[0].voxel.x == doctest::Approx(15.5));
  CHECK(c[0].center.z == doctest::Approx(10.0 + 2.0 * 11.5));
  CHECK(c[0].center.x == doctest::Approx(30.0 + 0.5 * 15.5));
  CHECK(c[0].probability == doctest::Approx(1.0));
  CHECK(c[0].prn_voxels == 64);
  const double d_vox = std::cbrt(6.0 * 64.0 / std::numbers::pi);
  CHECK(std::abs(d_vox - 4.9628) < 1e-4);
  CHECK(c[0].diameter_mm == doctest::Approx(d_vox));

  fill_cube(map, 24, 2, 2, 3, 0.9f);
  c = extract_candidates(v, map, 0.8f);
  CHECK(c.size() == 2);
  CHECK(extract_candidates(v, map, 0.95f).size() == 1);

  map(0, 31, 31) = 0.99f;
  CHECK(extract_candidates(v, map, 0.8f).size() == 2);
  CHECK(extract_candidates(v, map, 0.8f, 1).size() == 3);

  CHECK_THROWS_AS(extract_candidates(v, Grid3<float>({8, 8, 8}), 0.8f), Error);
}

TEST_CASE("component labels match a flood fill oracle") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double density = 0.05 + 0.3 * u(gen);
    Mask3 m({32, 32, 32}, 0);
    for (auto& b : m.values()) b = u(gen) < density;
    std::size_t expected_count = 0;
    const auto expected = flood_fill_labels(m, expected_count);
    const auto got = label_components(m);
    CHECK(got.count == expected_count);
    CHECK(got.labels == expected);
  }
}

TEST_CASE("raising the threshold never adds foreground") {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Grid3<float> map({24, 24, 24});
  for (float& x : map.values()) x = u(gen);
  std::size_t previous = map.size();
  for (float t : {0.3f, 0.5f, 0.7f, 0.9f, 0.99f}) {
    std::size_t covered = 0;
    for (const auto& c : threshold_components(map, t, 1)) {
      CHECK(c.max_value >= t);
      covered += c.voxels;
    }
    CHECK(covered <= previous);
    previous = covered;
  }
}

TEST_CASE("majority vote over the augmentation group") {
  const std::vector<double> d6{5, 5, 5, 5, 5, 5};
  auto v = vote(std::vector<double>(6, 0.9), d6);
  CHECK(v.is_nodule);
  CHECK(v.probability == doctest::Approx(0.9));

  v = vote(std::vector<double>{0.5, 0.5, 0.5, 0.3, 0.045, 0.035}, d6);
  CHECK(v.probability == doctest::Approx(0.31333).epsilon(1e-4));
  CHECK_FALSE(v.is_nodule);
  v = vote(std::vector<double>{0.9, 0.6, 0.6, 0.4, 0.3, 0.08}, d6);
  CHECK(v.probability == doctest::Approx(0.48));
  CHECK_FALSE(v.is_nodule);
  v = vote(std::vector<double>{0.9, 0.9, 0.9, 0.4, 0.3, 0.2}, d6);
  CHECK(v.is_nodule);
  v = vote(std::vector<double>{0.2, 0.2, 0.3, 0.4, 0.6, 0.7}, d6);
  CHECK_FALSE(v.is_nodule);

  v = vote(std::vector<double>(6, 0.9), std::vector<double>{4, 5, 6, 5, 5, 5});
  CHECK(v.diameter_mm == doctest::Approx(5.0));

  std::vector<double> p{0.9, 0.6, 0.6, 0.4, 0.3, 0.08}, d{4, 5, 6, 7, 8, 9};
  const Verdict base = vote(p, d);
  std::vector<std::size_t> idx{0, 1, 2, 3, 4, 5};
  std::mt19937_64 gen(17);
  for (int t = 0; t < 20; ++t) {
    std::shuffle(idx.begin(), idx.end(), gen);
    std::vector<double> pp, dd;
    for (auto i : idx) {
      pp.push_back(p[i]);
      dd.push_back(d[i]);
    }
    const Verdict w = vote(pp, dd);
    CHECK(w.is_nodule == base.is_nodule);
    CHECK(w.probability == doctest::Approx(base.probability));
    CHECK(w.diameter_mm == doctest::Approx(base.diameter_mm));
  }
  CHECK_THROWS_AS(vote(std::vector<double>{}, std::vector<double>{}), Error);
  CHECK_THROWS_AS(vote(std::vector<double>{0.5}, std::vector<double>{1, 2}), Error);
}

TEST_CASE("empty mask yields no detections") {
  const auto prn = tiny_prn(0, false);
  auto hsn = build_hsn<float>(HsnConfig::tiny(8));
  const Volume v = flat_volume({32, 32, 32});
  DetectorConfig c;
  c.patch = 16;
  c.stride = 16;
  const auto d = detect_preprocessed(v, Mask3(v.voxels.extents(), 0), prn, hsn, c);
  CHECK(d.prn_candidates.empty());
  CHECK(d.nodules.empty());
}

TEST_CASE("detections survive the candidate table") {
  testing::TempDir dir("detector");
  Candidate c;
  c.series_id = "a";
  c.center = {1.25, -2.5, 3.125};
  c.probability = 0.875;
  c.diameter_mm = 6.5;
  const std::vector<CandidateRecord> rows{to_record(c)};
  write_candidates(rows, dir / "c.csv");
  const auto back = read_candidates(dir / "c.csv");
  REQUIRE(back.size() == 1);
  CHECK(back[0].series_id == "a");
  CHECK(std::abs(back[0].center.x - 1.25) <= 1e-6);
  CHECK(std::abs(back[0].center.y + 2.5) <= 1e-6);
  CHECK(std::abs(back[0].probability - 0.875) <= 1e-6);
  CHECK(std::abs(back[0].diameter_mm - 6.5) <= 1e-6);
}
