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
#include <fstream>
#include <random>
#include <set>
#include <string>

#include "doctest.h"
#include "noduleforge/core/error.hpp"
#include "noduleforge/core/rng.hpp"
#include "noduleforge/eval/froc.hpp"
#include "support/temp_dir.hpp"

using namespace noduleforge;

namespace {

CandidateRecord cand(const std::string& id, WorldPoint c, double p, double d = 0.0) {
  return {id, c, p, d};
}

struct Fixture {
  std::vector<Annotation> annotations;
  std::vector<CandidateRecord> candidates;
  std::vector<std::string> ids;
};

/// Two scans: A holds n1 and n2, B holds n3.
Fixture two_scan_fixture() {
  Fixture f;
  f.ids = {"A", "B"};
  f.annotations = {{"A", {10, 10, 10}, 8.0}, {"A", {50, 50, 50}, 6.0}, {"B", {20, 30, 40}, 10.0}};
  f.candidates = {cand("A", {11, 10, 10}, 0.9), cand("A", {90, 90, 90}, 0.8),
                  cand("A", {50, 51, 50}, 0.7), cand("B", {20, 30, 42}, 0.6),
                  cand("B", {0, 0, 0}, 0.5)};
  return f;
}

/// Scans with well separated nodules so each candidate can hit at most one.
Fixture random_fixture(std::mt19937_64& gen, std::size_t n_scans) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Fixture f;
  for (std::size_t s = 0; s < n_scans; ++s) {
    const std::string id = "s" + std::to_string(s);
    f.ids.push_back(id);
    const int n = static_cast<int>(u(gen) * 4);
    for (int k = 0; k < n; ++k) {
      const WorldPoint c{40.0 * k, 0.0, 0.0};
      f.annotations.push_back({id, c, 4.0 + 10.0 * u(gen)});
    }
    const int m = static_cast<int>(u(gen) * 8);
    for (int k = 0; k < m; ++k) {
      WorldPoint c{160.0 * u(gen) - 10.0, 12.0 * u(gen) - 6.0, 12.0 * u(gen) - 6.0};
      f.candidates.push_back(cand(id, c, u(gen), 3.0 + 10.0 * u(gen)));
    }
  }
  if (f.annotations.empty()) f.annotations.push_back({"s0", {0, 0, 0}, 8.0});
  return f;
}

double dist(const WorldPoint& a, const WorldPoint& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                   (a.z - b.z) * (a.z - b.z));
}

/// Threshold sweep by exhaustive pairwise distances, for fixtures where no
/// candidate hits two nodules.
double brute_force_score(const Fixture& f) {
  std::set<double> thresholds;
  for (const auto& c : f.candidates) thresholds.insert(c.probability);
  std::vector<std::pair<double, double>> points;
  for (double t : thresholds) {
    std::size_t fp = 0;
    std::set<std::size_t> hit;
    for (const auto& c : f.candidates) {
      if (c.probability < t) continue;
      bool any = false;
      for (std::size_t n = 0; n < f.annotations.size(); ++n) {
        const auto& a = f.annotations[n];
        if (a.series_id == c.series_id && dist(a.center, c.center) < a.diameter_mm / 2) {
          hit.insert(n);
          any = true;
        }
      }
      fp += !any;
    }
    points.emplace_back(double(fp) / double(f.ids.size()),
                        double(hit.size()) / double(f.annotations.size()));
  }
  double sum = 0.0;
  for (double target : kFrocTargets) {
    double best = 0.0;
    for (const auto& [fp, sens] : points)
      if (fp <= target) best = std::max(best, sens);
    sum += best;
  }
  return sum / 7.0;
}

}  // namespace

TEST_CASE("hit criterion is strictly inside the radius") {
  const std::vector<Annotation> a{{"s", {0, 0, 0}, 10.0}};
  const std::vector<std::string> ids{"s"};
  auto m = match_candidates(std::vector{cand("s", {0, 0, 0}, 0.9)}, a, ids);
  CHECK(m[0].candidates[0].label == MatchLabel::kTruePositive);
  m = match_candidates(std::vector{cand("s", {6, 0, 0}, 0.9)}, a, ids);
  CHECK(m[0].candidates[0].label == MatchLabel::kFalsePositive);
  m = match_candidates(std::vector{cand("s", {0, 5, 0}, 0.9)}, a, ids);
  CHECK(m[0].candidates[0].label == MatchLabel::kFalsePositive);
  m = match_candidates(std::vector{cand("s", {0, 0, 4.99}, 0.9)}, a, ids);
  CHECK(m[0].candidates[0].label == MatchLabel::kTruePositive);
}

TEST_CASE("highest probability hit claims the nodule") {
  const std::vector<Annotation> a{{"s", {0, 0, 0}, 10.0}};
  const std::vector<std::string> ids{"s"};
  const std::vector<CandidateRecord> c{cand("s", {1, 0, 0}, 0.4), cand("s", {2, 0, 0}, 0.8)};
  const auto m = match_candidates(c, a, ids);
  REQUIRE(m[0].candidates.size() == 2);
  CHECK(m[0].candidates[0].probability == 0.8);
  CHECK(m[0].candidates[0].label == MatchLabel::kTruePositive);
  CHECK(m[0].candidates[1].label == MatchLabel::kDuplicate);

  const std::vector<CandidateRecord> reversed{c[1], c[0]};
  const auto r = match_candidates(reversed, a, ids);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(r[0].candidates[i].label == m[0].candidates[i].label);
    CHECK(r[0].candidates[i].probability == m[0].candidates[i].probability);
  }
}

TEST_CASE("exact duplicate candidates collapse to the most probable") {
  const std::vector<Annotation> a{{"s", {0, 0, 0}, 10.0}};
  const std::vector<std::string> ids{"s"};
  const auto m = match_candidates(
      std::vector{cand("s", {30, 0, 0}, 0.3), cand("s", {30, 0, 0}, 0.7)}, a, ids);
  REQUIRE(m[0].candidates.size() == 1);
  CHECK(m[0].candidates[0].probability == 0.7);
}

TEST_CASE("unknown scans are rejected") {
  const std::vector<Annotation> a{{"s", {0, 0, 0}, 10.0}};
  const std::vector<std::string> ids{"s"};
  CHECK_THROWS_AS(match_candidates(std::vector{cand("t", {0, 0, 0}, 0.5)}, a, ids), Error);
  const std::vector<Annotation> other{{"t", {0, 0, 0}, 10.0}};
  CHECK_THROWS_AS(match_candidates(std::vector<CandidateRecord>{}, other, ids), Error);
}

TEST_CASE("two scan fixture scores the hand enumerated sweep") {
  const Fixture f = two_scan_fixture();
  const auto scans = match_candidates(f.candidates, f.annotations, f.ids);
  const FrocCurve curve = froc_curve(scans);
  REQUIRE(curve.points.size() == 5);
  const double expect[5][2] = {{0, 1.0 / 3}, {0.5, 1.0 / 3}, {0.5, 2.0 / 3}, {0.5, 1}, {1, 1}};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(curve.points[i].fp_per_scan == doctest::Approx(expect[i][0]));
    CHECK(curve.points[i].sensitivity == doctest::Approx(expect[i][1]));
  }
  const std::array<double, 7> sens{1.0 / 3, 1.0 / 3, 1, 1, 1, 1, 1};
  for (std::size_t t = 0; t < 7; ++t) CHECK(curve.sensitivities[t] == doctest::Approx(sens[t]));
  CHECK(std::abs(curve.score - (1.0 / 3 + 1.0 / 3 + 5.0) / 7.0) < 1e-12);
  CHECK(curve.score == doctest::Approx(0.8095).epsilon(1e-4));
  CHECK(std::abs(brute_force_score(f) - curve.score) < 1e-12);
}

TEST_CASE("perfect and empty detectors") {
  Fixture f = two_scan_fixture();
  std::vector<CandidateRecord> perfect;
  for (const auto& a : f.annotations) perfect.push_back(cand(a.series_id, a.center, 1.0));
  auto r = evaluate_froc(perfect, f.annotations, f.ids, 100, 0);
  CHECK(r.curve.score == 1.0);
  for (double s : r.curve.sensitivities) CHECK(s == 1.0);
  CHECK(format_score(r).starts_with("score=1.0000 "));

  r = evaluate_froc(std::vector<CandidateRecord>{}, f.annotations, f.ids, 100, 0);
  CHECK(r.curve.score == 0.0);
  CHECK(r.n_hits == 0);
  CHECK(std::isnan(r.diameter_mae));

  CHECK_THROWS_AS(froc_curve(std::vector<ScanMatches>{}), Error);
  const std::vector<Annotation> none;
  CHECK_THROWS_AS(evaluate_froc(perfect, none, {"A", "B"}, 0, 0), Error);
}

TEST_CASE("random fixtures match the brute force sweep") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Fixture f = random_fixture(gen, 2 + trial % 9);
    const auto scans = match_candidates(f.candidates, f.annotations, f.ids);
    const FrocCurve curve = froc_curve(scans);
    CHECK(std::abs(curve.score - brute_force_score(f)) < 1e-12);
    CHECK(curve.score >= 0.0);
    CHECK(curve.score <= 1.0);
    for (std::size_t t = 1; t < 7; ++t) CHECK(curve.sensitivities[t] >= curve.sensitivities[t - 1]);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      CHECK(curve.points[i].threshold < curve.points[i - 1].threshold);
      CHECK(curve.points[i].fp_per_scan >= curve.points[i - 1].fp_per_scan);
      CHECK(curve.points[i].sensitivity >= curve.points[i - 1].sensitivity);
    }
  }
}

TEST_CASE("score is invariant under monotone probability transforms") {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 20; ++trial) {
    Fixture f = random_fixture(gen, 6);
    const double base = evaluate_froc(f.candidates, f.annotations, f.ids, 0).curve.score;
    for (auto& c : f.candidates) c.probability = 1.0 / (1.0 + std::exp(-8.0 * (c.probability - 0.3)));
    CHECK(evaluate_froc(f.candidates, f.annotations, f.ids, 0).curve.score == base);
  }
}

TEST_CASE("matching ignores candidate input order") {
  std::mt19937_64 gen(25);
  for (int trial = 0; trial < 20; ++trial) {
    Fixture f = random_fixture(gen, 5);
    const double base = evaluate_froc(f.candidates, f.annotations, f.ids, 0).curve.score;
    std::shuffle(f.candidates.begin(), f.candidates.end(), gen);
    CHECK(evaluate_froc(f.candidates, f.annotations, f.ids, 0).curve.score == base);
  }
}

TEST_CASE("bootstrap interval is seeded and bracketed") {
  const Fixture f = two_scan_fixture();
  const auto a = evaluate_froc(f.candidates, f.annotations, f.ids, 1000, 7);
  const auto b = evaluate_froc(f.candidates, f.annotations, f.ids, 1000, 7);
  CHECK(a.ci95.low == b.ci95.low);
  CHECK(a.ci95.high == b.ci95.high);
  CHECK(a.ci95.low <= a.ci95.high);

  std::mt19937_64 gen(27);
  for (int trial = 0; trial < 20; ++trial) {
    const Fixture r = random_fixture(gen, 12);
    const auto res = evaluate_froc(r.candidates, r.annotations, r.ids, 200, trial);
    CHECK(res.ci95.low <= res.ci95.high);
    CHECK(res.ci95.low >= 0.0);
    CHECK(res.ci95.high <= 1.0);
    CHECK(res.ci95.low <= res.curve.score);
    CHECK(res.curve.score <= res.ci95.high);
  }
}

TEST_CASE("identical scans give a zero width interval") {
  Fixture f;
  for (const char* id : {"a", "b", "c", "d"}) {
    f.ids.push_back(id);
    f.annotations.push_back({id, {0, 0, 0}, 10.0});
    f.candidates.push_back(cand(id, {1, 0, 0}, 0.9));
    f.candidates.push_back(cand(id, {40, 0, 0}, 0.95));
  }
  const auto r = evaluate_froc(f.candidates, f.annotations, f.ids, 1000, 3);
  CHECK(r.ci95.low == r.curve.score);
  CHECK(r.ci95.high == r.curve.score);
}

TEST_CASE("single bootstrap draw equals one resampled score") {
  const Fixture f = two_scan_fixture();
  const auto scans = match_candidates(f.candidates, f.annotations, f.ids);
  const auto ci = bootstrap_ci(scans, 1, 0.95, 42);
  Rng rng(derive_seed(42, 0));
  std::vector<ScanMatches> draw;
  std::size_t nodules = 0;
  while (nodules == 0) {
    draw.clear();
    for (std::size_t k = 0; k < scans.size(); ++k) {
      draw.push_back(scans[rng.below(scans.size())]);
      nodules += draw.back().n_nodules;
    }
  }
  const double score = froc_curve(draw).score;
  CHECK(ci.low == score);
  CHECK(ci.high == score);
  CHECK_THROWS_AS(bootstrap_ci(std::span(scans).first(1), 10, 0.95, 0), Error);
}

TEST_CASE("diameter error is the mean absolute difference") {
  const std::vector<std::pair<double, double>> pairs{{4, 5}, {10, 8}};
  CHECK(diameter_error(pairs) == doctest::Approx(1.5));
  const std::vector<std::pair<double, double>> same{{6, 6}, {7.5, 7.5}};
  CHECK(diameter_error(same) == 0.0);
  CHECK_THROWS_AS(diameter_error(std::vector<std::pair<double, double>>{}), Error);

  std::mt19937_64 gen(29);
  std::uniform_real_distribution<double> u(3.0, 30.0);
  std::vector<std::pair<double, double>> r(50);
  double sum = 0.0;
  for (auto& [d, t] : r) {
    d = u(gen);
    t = u(gen);
    sum += std::abs(d - t);
  }
  CHECK(diameter_error(r) == doctest::Approx(sum / 50.0));

  Fixture f = two_scan_fixture();
  f.candidates[0].diameter_mm = 7.0;
  f.candidates[2].diameter_mm = 8.0;
  f.candidates[3].diameter_mm = 10.0;
  const auto res = evaluate_froc(f.candidates, f.annotations, f.ids, 0);
  CHECK(res.n_hits == 3);
  CHECK(res.diameter_mae == doctest::Approx((1.0 + 2.0 + 0.0) / 3.0));
}

TEST_CASE("froc table lists the sweep") {
  testing::TempDir dir("froc");
  const Fixture f = two_scan_fixture();
  const auto r = evaluate_froc(f.candidates, f.annotations, f.ids, 0);
  write_froc_table(dir / "froc.csv", r.curve);
  std::ifstream in(dir / "froc.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "threshold,fp_per_scan,sensitivity");
  std::size_t rows = 0;
  while (std::getline(in, line)) rows += !line.empty();
  CHECK(rows == r.curve.points.size());
}
