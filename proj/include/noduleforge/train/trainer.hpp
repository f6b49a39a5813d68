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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "noduleforge/core/checkpoint.hpp"
#include "noduleforge/core/ops.hpp"
#include "noduleforge/core/rng.hpp"
#include "noduleforge/io/config_file.hpp"
#include "noduleforge/model/graph.hpp"
#include "noduleforge/train/samples.hpp"

namespace noduleforge {

struct TrainConfig {
  std::size_t batch_size = 16;
  double momentum = 0.9;
  double lr_initial = 0.01;
  double lr_late = 0.001;
  /// Epochs (1-based) up to and including this one use lr_initial.
  std::size_t lr_drop_epoch = 20;
  double validation_fraction = 0.2;
  std::size_t patience = 20;
  std::size_t max_epochs = 200;
  std::uint64_t seed = 0;
  InitScheme init = InitScheme::kScaledNormal;
  /// Stop as soon as the mean training loss falls below this (0 disables).
  double target_train_loss = 0.0;
  SampleConfig samples;

  void validate() const;
  double learning_rate(std::size_t epoch) const;
  /// Overrides fields from `key = value` entries; unknown keys are rejected.
  void apply(const ConfigFile& config, const std::string& prefix = "");
  std::string describe() const;
};

enum class ValidationMetric { kLoss, kAccuracy };

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_metric = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_metric = 0.0;
  bool early_stopped = false;
  std::vector<CheckpointRecord> best_state;
};

template <typename T>
struct BatchOutcome {
  Tensor<T> loss;
  /// Correctly classified samples, used for accuracy-driven validation.
  std::size_t correct = 0;
};

template <typename T>
using BatchFn = std::function<BatchOutcome<T>(std::span<const SampleRef>, Mode, Rng&)>;

/// True when `current` beats `best` under the metric's direction.
bool improves(ValidationMetric metric, double current, double best);

/// Mini-batch SGD with momentum. Shuffling, dropout and the initial weights
/// all draw from streams derived from config.seed. Stops after max_epochs or
/// when the validation metric has not improved for `patience` epochs, and
/// loads the best-validation parameters back into `graph`.
template <typename T>
TrainResult train_model(ModelGraph<T>& graph, std::span<const SampleRef> train,
                        std::span<const SampleRef> validation, const BatchFn<T>& batch_fn,
                        ValidationMetric metric, const TrainConfig& config);

/// Scan-level split: round(fraction * n) scans, at least one when n > 1,
/// are drawn for validation.
struct ScanSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};
ScanSplit split_scans(std::size_t n_scans, double validation_fraction, std::uint64_t seed);

void write_history(const std::filesystem::path& path, const TrainResult& result, std::uint64_t seed);

}  // namespace noduleforge
