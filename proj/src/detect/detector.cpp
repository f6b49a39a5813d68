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

#include "noduleforge/detect/detector.hpp"

#include <algorithm>
#include <numeric>

#include "noduleforge/core/error.hpp"
#include "noduleforge/core/parallel.hpp"
#include "noduleforge/detect/components.hpp"
#include "noduleforge/model/hsn.hpp"
#include "noduleforge/preprocess/lung_mask.hpp"
#include "noduleforge/train/augment.hpp"
#include "noduleforge/train/samples.hpp"
#include "noduleforge/train/tasks.hpp"

namespace noduleforge {

void DetectorConfig::validate() const {
  require(patch > 0 && stride > 0 && stride <= patch, ErrorKind::kInvalidArgument,
          "detector: stride must be in [1, patch]");
  require(threshold > 0.0f && threshold < 1.0f, ErrorKind::kInvalidArgument,
          "detector: threshold must be in (0, 1)");
  require(window_batch > 0, ErrorKind::kInvalidArgument, "detector: window_batch must be positive");
}

std::vector<std::size_t> window_starts(std::size_t extent, std::size_t patch, std::size_t stride) {
  std::vector<std::size_t> starts;
  if (extent <= patch) return {0};
  for (std::size_t s = 0; s + patch <= extent; s += stride) starts.push_back(s);
  if (starts.back() + patch < extent) starts.push_back(extent - patch);
  return starts;
}

Grid3<float> sliding_window_prn(const Volume& volume, const Mask3& mask,
                                const ModelGraph<float>& prn, const DetectorConfig& config) {
  config.validate();
  const auto& grid = volume.voxels;
  require(mask.extents() == grid.extents(), ErrorKind::kShapeMismatch,
          "sliding_window_prn: mask extents differ from volume");
  const std::size_t p = config.patch;
  const long half = static_cast<long>(p / 2);

  std::vector<std::array<std::size_t, 3>> windows;
  for (std::size_t z : window_starts(grid.depth(), p, config.stride))
    for (std::size_t y : window_starts(grid.height(), p, config.stride))
      for (std::size_t x : window_starts(grid.width(), p, config.stride)) {
        bool any = false;
        for (std::size_t dz = 0; dz < p && !any && z + dz < grid.depth(); ++dz)
          for (std::size_t dy = 0; dy < p && !any && y + dy < grid.height(); ++dy)
            for (std::size_t dx = 0; dx < p && !any && x + dx < grid.width(); ++dx)
              any = mask(z + dz, y + dy, x + dx) != 0;
        if (any) windows.push_back({z, y, x});
      }

  const std::size_t n_batches = (windows.size() + config.window_batch - 1) / config.window_batch;
  std::vector<Array<float>> outputs(n_batches);
  parallel_for(n_batches, config.workers, [&](std::size_t b) {
    NoGradGuard no_grad;
    const std::size_t begin = b * config.window_batch;
    const std::size_t end = std::min(windows.size(), begin + config.window_batch);
    const std::size_t voxels = p * p * p;
    Array<float> input({end - begin, 1, p, p, p});
    for (std::size_t w = begin; w < end; ++w) {
      const auto& o = windows[w];
      const VoxelIndex center{static_cast<long>(o[0]) + half, static_cast<long>(o[1]) + half,
                              static_cast<long>(o[2]) + half};
      const Array<float> patch = extract_patch(volume, center, p, kMaskPadHu);
      std::copy(patch.data(), patch.data() + voxels, input.data() + (w - begin) * voxels);
    }
    Tensor<float> x(std::move(input));
    outputs[b] = prn.forward(std::span<const Tensor<float>>(&x, 1), Mode::kInference)[0].array();
  });

  Grid3<float> map(grid.extents(), 0.0f);
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const Array<float>& out = outputs[w / config.window_batch];
    const float* src = out.data() + (w % config.window_batch) * p * p * p;
    const auto& o = windows[w];
    for (std::size_t dz = 0; dz < p; ++dz)
      for (std::size_t dy = 0; dy < p; ++dy)
        for (std::size_t dx = 0; dx < p; ++dx) {
          const std::size_t z = o[0] + dz, y = o[1] + dy, x = o[2] + dx;
          if (z >= grid.depth() || y >= grid.height() || x >= grid.width()) continue;
          float& m = map(z, y, x);
          m = std::max(m, src[(dz * p + dy) * p + dx]);
        }
  }
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (!mask[i]) map[i] = 0.0f;
  }
  return map;
}

std::vector<Candidate> extract_candidates(const Volume& volume, const Grid3<float>& map,
                                          float threshold, std::size_t min_voxels) {
  require(map.extents() == volume.voxels.extents(), ErrorKind::kShapeMismatch,
          "extract_candidates: map extents differ from volume");
  const double voxel_mm =
      std::cbrt(volume.spacing[0] * volume.spacing[1] * volume.spacing[2]);
  std::vector<Candidate> out;
  for (const Component& c : threshold_components(map, threshold, min_voxels)) {
    Candidate cand;
    cand.series_id = volume.series_id;
    cand.voxel = c.centroid;
    cand.center = voxel_to_world(volume, c.centroid);
    cand.probability = c.max_value;
    cand.prn_diameter_mm = c.equivalent_diameter * voxel_mm;
    cand.diameter_mm = cand.prn_diameter_mm;
    cand.prn_voxels = c.voxels;
    cand.source = CandidateSource::kPrn;
    out.push_back(cand);
  }
  return out;
}

Verdict vote(std::span<const double> probabilities, std::span<const double> diameters) {
  require(!probabilities.empty() && probabilities.size() == diameters.size(),
          ErrorKind::kInvalidArgument, "vote: need matching, non-empty predictions");
  const double n = static_cast<double>(probabilities.size());
  std::size_t votes = 0;
  for (double p : probabilities) votes += p >= 0.5;
  Verdict v;
  v.probability = std::accumulate(probabilities.begin(), probabilities.end(), 0.0) / n;
  v.diameter_mm = std::accumulate(diameters.begin(), diameters.end(), 0.0) / n;
  const std::size_t against = probabilities.size() - votes;
  v.is_nodule = votes > against || (votes == against && v.probability >= 0.5);
  return v;
}

Verdict classify_candidate(const Volume& volume, const Candidate& candidate,
                           const ModelGraph<float>& hsn) {
  NoGradGuard no_grad;
  const VoxelIndex center{std::lround(candidate.voxel.z), std::lround(candidate.voxel.y),
                          std::lround(candidate.voxel.x)};
  const std::size_t edge = kConcentricSizes[0];
  const std::size_t voxels = edge * edge * edge;
  const std::size_t n = kAllTransforms.size();
  std::array<Array<float>, 3> inputs;
  for (auto& a : inputs) a = Array<float>({n, 1, edge, edge, edge});
  for (std::size_t t = 0; t < n; ++t) {
    auto crops = hsn_inputs(volume, center, kAllTransforms[t]);
    for (std::size_t k = 0; k < 3; ++k) {
      std::copy(crops[k].data(), crops[k].data() + voxels, inputs[k].data() + t * voxels);
    }
  }
  std::vector<Tensor<float>> xs;
  for (auto& a : inputs) xs.emplace_back(std::move(a));
  const auto out = hsn.forward(xs, Mode::kInference);
  std::vector<double> p(n), d(n);
  for (std::size_t t = 0; t < n; ++t) {
    p[t] = out[0].values()[t];
    d[t] = out[1].values()[t];
  }
  return vote(p, d);
}

Detection detect_preprocessed(const Volume& volume, const Mask3& mask,
                              const ModelGraph<float>& prn, const ModelGraph<float>& hsn,
                              const DetectorConfig& config) {
  Detection result;
  const Grid3<float> map = sliding_window_prn(volume, mask, prn, config);
  result.prn_candidates = extract_candidates(volume, map, config.threshold, config.min_voxels);
  std::vector<Verdict> verdicts(result.prn_candidates.size());
  parallel_for(verdicts.size(), config.workers, [&](std::size_t i) {
    verdicts[i] = classify_candidate(volume, result.prn_candidates[i], hsn);
  });
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (!verdicts[i].is_nodule) continue;
    Candidate c = result.prn_candidates[i];
    c.probability = verdicts[i].probability;
    c.diameter_mm = verdicts[i].diameter_mm;
    c.source = CandidateSource::kHsnFinal;
    result.nodules.push_back(c);
  }
  auto order = [](const Candidate& a, const Candidate& b) {
    return std::tie(a.series_id, a.voxel.z, a.voxel.y, a.voxel.x) <
           std::tie(b.series_id, b.voxel.z, b.voxel.y, b.voxel.x);
  };
  std::sort(result.prn_candidates.begin(), result.prn_candidates.end(), order);
  std::sort(result.nodules.begin(), result.nodules.end(), order);
  return result;
}

Detection detect(const Volume& raw, const ModelGraph<float>& prn, const ModelGraph<float>& hsn,
                 const DetectorConfig& config) {
  Mask3 mask;
  const Volume volume = preprocess_scan(raw, config.workers, &mask);
  return detect_preprocessed(volume, mask, prn, hsn, config);
}

CandidateRecord to_record(const Candidate& c) {
  return {c.series_id, c.center, c.probability, c.diameter_mm};
}

}  // namespace noduleforge
