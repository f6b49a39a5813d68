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
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "noduleforge/io/tables.hpp"

namespace noduleforge {

inline constexpr std::array<double, 7> kFrocTargets{0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
inline constexpr std::size_t kNoNodule = std::numeric_limits<std::size_t>::max();

enum class MatchLabel { kTruePositive, kFalsePositive, kDuplicate };

struct LabeledCandidate {
  double probability = 0.0;
  MatchLabel label = MatchLabel::kFalsePositive;
  /// Index into the annotation list for true positives and duplicates.
  std::size_t nodule = kNoNodule;
  double diameter_mm = 0.0;
};

/// Candidates and nodules of one scan, labeled.
struct ScanMatches {
  std::string series_id;
  std::vector<LabeledCandidate> candidates;
  std::size_t n_nodules = 0;
};

/// A candidate hits a nodule when their distance is below the nodule radius.
/// Candidates are visited by descending probability; each claims the nearest
/// unclaimed nodule it hits. Hits on already-claimed nodules are duplicates
/// and count neither as hits nor as false positives; everything else is a
/// false positive. Exact (series, centre) duplicates keep the most probable.
std::vector<ScanMatches> match_candidates(std::span<const CandidateRecord> candidates,
                                          std::span<const Annotation> annotations,
                                          std::span<const std::string> series_ids);

struct FrocPoint {
  double threshold = 0.0;
  double fp_per_scan = 0.0;
  double sensitivity = 0.0;
};

struct FrocCurve {
  std::vector<FrocPoint> points;
  std::array<double, 7> sensitivities{};
  double score = 0.0;
};

/// Threshold sweep over distinct probabilities, descending. Sensitivity at a
/// target rate is the best sensitivity among points at or below that rate.
FrocCurve froc_curve(std::span<const ScanMatches> scans);

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
};

/// Percentile bootstrap over scans. Draw i uses derive_seed(seed, i).
ConfidenceInterval bootstrap_ci(std::span<const ScanMatches> scans, std::size_t n_boot,
                                double level, std::uint64_t seed);

/// Mean |detected - true| over (detected, true) pairs.
double diameter_error(std::span<const std::pair<double, double>> pairs);

struct FrocResult {
  FrocCurve curve;
  ConfidenceInterval ci95;
  std::size_t n_scans = 0;
  std::size_t n_nodules = 0;
  std::size_t n_hits = 0;
  /// NaN when no nodule was hit.
  double diameter_mae = std::numeric_limits<double>::quiet_NaN();
};

/// `series_ids` lists every evaluated scan, including scans with neither
/// nodules nor candidates. Empty means the union of both tables.
FrocResult evaluate_froc(std::span<const CandidateRecord> candidates,
                         std::span<const Annotation> annotations,
                         std::vector<std::string> series_ids, std::size_t n_boot = 1000,
                         std::uint64_t seed = 0);

/// `score=0.xxxx ci95=[0.xxxx,0.xxxx]`
std::string format_score(const FrocResult& result);

/// threshold,fp_per_scan,sensitivity
void write_froc_table(const std::filesystem::path& path, const FrocCurve& curve);

}  // namespace noduleforge
