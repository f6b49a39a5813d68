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

#include <vector>

#include "noduleforge/model/hsn.hpp"
#include "noduleforge/model/prn.hpp"
#include "noduleforge/train/trainer.hpp"

namespace noduleforge {

/// Voxelwise BCE of the PRN map against sphere targets.
template <typename T>
BatchFn<T> prn_batch_fn(const ModelGraph<T>& prn, const std::vector<ScanData>& scans,
                        std::size_t patch);

/// HSN loss on concentric crops; `correct` counts thresholded agreement.
template <typename T>
BatchFn<T> hsn_batch_fn(const ModelGraph<T>& hsn, const std::vector<ScanData>& scans);

/// Concentric crops of one sample, transformed and normalized.
std::array<Array<float>, 3> hsn_inputs(const Volume& volume, const VoxelIndex& center,
                                       ZTransform transform);

template <typename T>
struct TrainedModel {
  ModelGraph<T> graph;
  TrainResult result;
  std::size_t train_samples = 0;
  std::size_t validation_samples = 0;
};

/// Splits scans, builds sample sets for both sides and trains.
TrainedModel<float> train_prn(const std::vector<ScanData>& scans, const PrnConfig& model,
                              const TrainConfig& config);
TrainedModel<float> train_hsn(const std::vector<ScanData>& scans, const HsnConfig& model,
                              const TrainConfig& config);

}  // namespace noduleforge
