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
#include <span>
#include <string>
#include <vector>

#include "noduleforge/io/tables.hpp"
#include "noduleforge/io/volume.hpp"
#include "noduleforge/model/graph.hpp"

namespace noduleforge {

enum class CandidateSource { kPrn, kHsnFinal };

struct Candidate {
  std::string series_id;
  WorldPoint center;
  VoxelPoint voxel;
  double probability = 0.0;
  double diameter_mm = 0.0;
  /// Equivalent-sphere diameter of the PRN component, kept for diagnostics.
  double prn_diameter_mm = 0.0;
  std::size_t prn_voxels = 0;
  CandidateSource source = CandidateSource::kPrn;
};

struct DetectorConfig {
  std::size_t patch = 32;
  std::size_t stride = 32;
  float threshold = 0.8f;
  std::size_t min_voxels = 2;
  std::size_t window_batch = 4;
  std::size_t workers = 1;

  void validate() const;
};

/// Window origins along one axis: multiples of stride, plus a final window
/// flush with the far edge.
std::vector<std::size_t> window_starts(std::size_t extent, std::size_t patch, std::size_t stride);

/// Full-volume PRN probability map fused by voxelwise maximum. Windows with
/// no mask voxel are skipped and the map is 0 outside the mask.
Grid3<float> sliding_window_prn(const Volume& volume, const Mask3& mask,
                                const ModelGraph<float>& prn, const DetectorConfig& config);

/// Connected components of the thresholded map as PRN candidates.
std::vector<Candidate> extract_candidates(const Volume& volume, const Grid3<float>& map,
                                          float threshold, std::size_t min_voxels = 2);

struct Verdict {
  bool is_nodule = false;
  double probability = 0.0;
  double diameter_mm = 0.0;
};

/// Majority vote over six predictions: positive with at least 4 votes of
/// p >= 0.5, a 3-3 tie resolved by mean p >= 0.5. Reports mean p and mean d.
Verdict vote(std::span<const double> probabilities, std::span<const double> diameters);

/// Runs the HSN on the candidate's concentric crops and their five
/// augmented copies.
Verdict classify_candidate(const Volume& volume, const Candidate& candidate,
                           const ModelGraph<float>& hsn);

struct Detection {
  std::vector<Candidate> prn_candidates;
  std::vector<Candidate> nodules;
};

/// Preprocessed volume and mask in, HSN-confirmed nodules out, ordered by
/// (series, z, y, x).
Detection detect_preprocessed(const Volume& volume, const Mask3& mask,
                              const ModelGraph<float>& prn, const ModelGraph<float>& hsn,
                              const DetectorConfig& config);

/// Raw scan in: resample, segment, mask, then detect_preprocessed.
Detection detect(const Volume& raw, const ModelGraph<float>& prn, const ModelGraph<float>& hsn,
                 const DetectorConfig& config);

CandidateRecord to_record(const Candidate& c);

}  // namespace noduleforge
