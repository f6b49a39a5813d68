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

#include "noduleforge/eval/froc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "noduleforge/core/error.hpp"
#include "noduleforge/core/rng.hpp"

namespace noduleforge {
namespace {

double distance(const WorldPoint& a, const WorldPoint& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Sensitivities and score from a flat list of labeled candidates.
FrocCurve curve_from(std::vector<LabeledCandidate> all, std::size_t n_nodules, std::size_t n_scans) {
  require(n_scans > 0, ErrorKind::kInvalidArgument, "froc: no scans");
  require(n_nodules > 0, ErrorKind::kInvalidArgument, "froc: no nodules");
  std::sort(all.begin(), all.end(), [](const LabeledCandidate& a, const LabeledCandidate& b) {
    return a.probability > b.probability;
  });
  FrocCurve curve;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < all.size();) {
    const double threshold = all[i].probability;
    for (; i < all.size() && all[i].probability == threshold; ++i) {
      tp += all[i].label == MatchLabel::kTruePositive;
      fp += all[i].label == MatchLabel::kFalsePositive;
    }
    curve.points.push_back({threshold, static_cast<double>(fp) / static_cast<double>(n_scans),
                            static_cast<double>(tp) / static_cast<double>(n_nodules)});
  }
  for (std::size_t t = 0; t < kFrocTargets.size(); ++t) {
    double best = 0.0;
    for (const auto& p : curve.points) {
      if (p.fp_per_scan <= kFrocTargets[t]) best = std::max(best, p.sensitivity);
    }
    curve.sensitivities[t] = best;
  }
  curve.score = std::accumulate(curve.sensitivities.begin(), curve.sensitivities.end(), 0.0) /
                static_cast<double>(kFrocTargets.size());
  return curve;
}

double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

std::vector<ScanMatches> match_candidates(std::span<const CandidateRecord> candidates,
                                          std::span<const Annotation> annotations,
                                          std::span<const std::string> series_ids) {
  std::map<std::string, std::size_t> index;
  std::vector<ScanMatches> scans;
  for (const auto& id : series_ids) {
    if (index.emplace(id, scans.size()).second) scans.push_back({id, {}, 0});
  }
  std::vector<std::vector<std::size_t>> nodules(scans.size());
  for (std::size_t n = 0; n < annotations.size(); ++n) {
    auto it = index.find(annotations[n].series_id);
    require(it != index.end(), ErrorKind::kSchemaMismatch,
            "froc: annotation for unknown scan " + annotations[n].series_id);
    nodules[it->second].push_back(n);
    scans[it->second].n_nodules += 1;
  }

  // Collapse exact duplicates, keeping the most probable.
  std::map<std::tuple<std::string, double, double, double>, CandidateRecord> unique;
  for (const auto& c : candidates) {
    require(index.count(c.series_id), ErrorKind::kSchemaMismatch,
            "froc: candidate for unknown scan " + c.series_id);
    auto key = std::make_tuple(c.series_id, c.center.x, c.center.y, c.center.z);
    auto [it, inserted] = unique.emplace(key, c);
    if (!inserted) {
      spdlog::warn("froc: duplicate candidate in {} collapsed", c.series_id);
      if (c.probability > it->second.probability) it->second = c;
    }
  }
  std::vector<std::vector<CandidateRecord>> per_scan(scans.size());
  for (const auto& [key, c] : unique) per_scan[index.at(c.series_id)].push_back(c);

  for (std::size_t s = 0; s < scans.size(); ++s) {
    auto& list = per_scan[s];
    std::stable_sort(list.begin(), list.end(), [](const CandidateRecord& a, const CandidateRecord& b) {
      return a.probability > b.probability;
    });
    std::set<std::size_t> claimed;
    for (const auto& c : list) {
      LabeledCandidate lc{c.probability, MatchLabel::kFalsePositive, kNoNodule, c.diameter_mm};
      double best = INFINITY;
      std::size_t best_free = kNoNodule, any_hit = kNoNodule;
      for (std::size_t n : nodules[s]) {
        const double d = distance(c.center, annotations[n].center);
        if (d >= annotations[n].diameter_mm / 2.0) continue;
        if (any_hit == kNoNodule) any_hit = n;
        if (!claimed.count(n) && d < best) {
          best = d;
          best_free = n;
        }
      }
      if (best_free != kNoNodule) {
        lc.label = MatchLabel::kTruePositive;
        lc.nodule = best_free;
        claimed.insert(best_free);
      } else if (any_hit != kNoNodule) {
        lc.label = MatchLabel::kDuplicate;
        lc.nodule = any_hit;
      }
      scans[s].candidates.push_back(lc);
    }
  }
  return scans;
}

FrocCurve froc_curve(std::span<const ScanMatches> scans) {
  std::vector<LabeledCandidate> all;
  std::size_t n_nodules = 0;
  for (const auto& s : scans) {
    all.insert(all.end(), s.candidates.begin(), s.candidates.end());
    n_nodules += s.n_nodules;
  }
  return curve_from(std::move(all), n_nodules, scans.size());
}

ConfidenceInterval bootstrap_ci(std::span<const ScanMatches> scans, std::size_t n_boot,
                                double level, std::uint64_t seed) {
  require(scans.size() >= 2, ErrorKind::kInvalidArgument, "bootstrap: need at least two scans");
  require(n_boot > 0 && level > 0.0 && level < 1.0, ErrorKind::kInvalidArgument,
          "bootstrap: invalid draw count or level");
  std::size_t total_nodules = 0;
  for (const auto& s : scans) total_nodules += s.n_nodules;
  require(total_nodules > 0, ErrorKind::kInvalidArgument, "bootstrap: no nodules");

  std::vector<double> scores(n_boot);
  std::vector<LabeledCandidate> pooled;
  for (std::size_t b = 0; b < n_boot; ++b) {
    Rng rng(derive_seed(seed, b));
    std::size_t n_nodules = 0;
    // Redraw until the resample holds at least one nodule.
    while (n_nodules == 0) {
      pooled.clear();
      for (std::size_t k = 0; k < scans.size(); ++k) {
        const ScanMatches& s = scans[rng.below(scans.size())];
        pooled.insert(pooled.end(), s.candidates.begin(), s.candidates.end());
        n_nodules += s.n_nodules;
      }
    }
    scores[b] = curve_from(pooled, n_nodules, scans.size()).score;
  }
  const double tail = (1.0 - level) / 2.0;
  return {percentile(scores, tail), percentile(scores, 1.0 - tail)};
}

double diameter_error(std::span<const std::pair<double, double>> pairs) {
  require(!pairs.empty(), ErrorKind::kInvalidArgument, "diameter_error: no matched pairs");
  double sum = 0.0;
  for (const auto& [detected, truth] : pairs) sum += std::abs(detected - truth);
  return sum / static_cast<double>(pairs.size());
}

FrocResult evaluate_froc(std::span<const CandidateRecord> candidates,
                         std::span<const Annotation> annotations,
                         std::vector<std::string> series_ids, std::size_t n_boot,
                         std::uint64_t seed) {
  if (series_ids.empty()) {
    std::set<std::string> ids;
    for (const auto& a : annotations) ids.insert(a.series_id);
    for (const auto& c : candidates) ids.insert(c.series_id);
    series_ids.assign(ids.begin(), ids.end());
  }
  const auto scans = match_candidates(candidates, annotations, series_ids);
  FrocResult result;
  result.curve = froc_curve(scans);
  result.n_scans = scans.size();
  result.n_nodules = annotations.size();
  std::vector<std::pair<double, double>> pairs;
  for (const auto& s : scans) {
    for (const auto& c : s.candidates) {
      if (c.label == MatchLabel::kTruePositive) {
        pairs.emplace_back(c.diameter_mm, annotations[c.nodule].diameter_mm);
      }
    }
  }
  result.n_hits = pairs.size();
  if (!pairs.empty()) result.diameter_mae = diameter_error(pairs);
  if (n_boot > 0 && scans.size() >= 2) {
    result.ci95 = bootstrap_ci(scans, n_boot, 0.95, seed);
  } else {
    result.ci95 = {result.curve.score, result.curve.score};
  }
  return result;
}

std::string format_score(const FrocResult& result) {
  return fmt::format("score={:.4f} ci95=[{:.4f},{:.4f}]", result.curve.score, result.ci95.low,
                     result.ci95.high);
}

void write_froc_table(const std::filesystem::path& path, const FrocCurve& curve) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  out << "threshold,fp_per_scan,sensitivity\n";
  for (const auto& p : curve.points) {
    out << fmt::format("{},{},{}\n", p.threshold, p.fp_per_scan, p.sensitivity);
  }
}

}  // namespace noduleforge
