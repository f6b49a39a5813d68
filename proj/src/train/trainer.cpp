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

#include "noduleforge/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "noduleforge/core/error.hpp"
#include "noduleforge/core/optim.hpp"

namespace noduleforge {

namespace {

enum Stream : std::uint64_t { kInitStream = 1, kShuffleStream = 2, kDropoutStream = 3, kSplitStream = 4 };

}  // namespace

void TrainConfig::validate() const {
  require(batch_size > 0, ErrorKind::kInvalidArgument, "train: batch_size must be positive");
  require(momentum >= 0.0 && momentum < 1.0, ErrorKind::kInvalidArgument,
          "train: momentum must be in [0, 1)");
  require(lr_initial > 0.0 && lr_late > 0.0, ErrorKind::kInvalidArgument,
          "train: learning rates must be positive");
  require(validation_fraction > 0.0 && validation_fraction < 1.0, ErrorKind::kInvalidArgument,
          "train: validation_fraction must be in (0, 1)");
  require(patience > 0 && max_epochs > 0, ErrorKind::kInvalidArgument,
          "train: patience and max_epochs must be positive");
  require(samples.neg_pos_ratio >= 0.0 && samples.exclusion_mm >= 0.0, ErrorKind::kInvalidArgument,
          "train: sampling ratios must be non-negative");
}

double TrainConfig::learning_rate(std::size_t epoch) const {
  return epoch <= lr_drop_epoch ? lr_initial : lr_late;
}

void TrainConfig::apply(const ConfigFile& config, const std::string& prefix) {
  static const std::vector<std::string> kKeys = {
      "batch_size", "momentum", "lr_initial", "lr_late", "lr_drop_epoch", "validation_fraction",
      "patience", "max_epochs", "seed", "init", "target_train_loss", "neg_pos_ratio",
      "exclusion_mm", "tissue_fraction", "tissue_hu", "jitter_voxels", "augment"};
  for (const auto& [key, value] : config.entries()) {
    if (key.rfind(prefix, 0) != 0) continue;
    const std::string k = key.substr(prefix.size());
    if (k.find('.') != std::string::npos) continue;
    require(std::find(kKeys.begin(), kKeys.end(), k) != kKeys.end(), ErrorKind::kInvalidArgument,
            "config: unknown training key '" + key + "'");
  }
  auto key = [&](const char* k) { return prefix + k; };
  batch_size = static_cast<std::size_t>(config.get_int(key("batch_size"), static_cast<long>(batch_size)));
  momentum = config.get_double(key("momentum"), momentum);
  lr_initial = config.get_double(key("lr_initial"), lr_initial);
  lr_late = config.get_double(key("lr_late"), lr_late);
  lr_drop_epoch = static_cast<std::size_t>(config.get_int(key("lr_drop_epoch"), static_cast<long>(lr_drop_epoch)));
  validation_fraction = config.get_double(key("validation_fraction"), validation_fraction);
  patience = static_cast<std::size_t>(config.get_int(key("patience"), static_cast<long>(patience)));
  max_epochs = static_cast<std::size_t>(config.get_int(key("max_epochs"), static_cast<long>(max_epochs)));
  seed = static_cast<std::uint64_t>(config.get_int(key("seed"), static_cast<long>(seed)));
  if (auto v = config.get(key("init"))) init = parse_init_scheme(*v);
  target_train_loss = config.get_double(key("target_train_loss"), target_train_loss);
  samples.neg_pos_ratio = config.get_double(key("neg_pos_ratio"), samples.neg_pos_ratio);
  samples.exclusion_mm = config.get_double(key("exclusion_mm"), samples.exclusion_mm);
  samples.tissue_fraction = config.get_double(key("tissue_fraction"), samples.tissue_fraction);
  samples.tissue_hu = static_cast<float>(config.get_double(key("tissue_hu"), samples.tissue_hu));
  samples.jitter_voxels = config.get_int(key("jitter_voxels"), samples.jitter_voxels);
  samples.augment = config.get_bool(key("augment"), samples.augment);
  validate();
}

std::string TrainConfig::describe() const {
  return fmt::format(
      "batch_size={} momentum={} lr_initial={} lr_late={} lr_drop_epoch={} "
      "validation_fraction={} patience={} max_epochs={} seed={} init={} target_train_loss={} "
      "neg_pos_ratio={} exclusion_mm={} tissue_fraction={} tissue_hu={} jitter_voxels={} augment={}",
      batch_size, momentum, lr_initial, lr_late, lr_drop_epoch, validation_fraction, patience,
      max_epochs, seed, to_string(init), target_train_loss, samples.neg_pos_ratio,
      samples.exclusion_mm, samples.tissue_fraction, samples.tissue_hu, samples.jitter_voxels,
      samples.augment);
}

bool improves(ValidationMetric metric, double current, double best) {
  return metric == ValidationMetric::kLoss ? current < best : current > best;
}

ScanSplit split_scans(std::size_t n_scans, double validation_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(n_scans);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, kSplitStream));
  std::shuffle(order.begin(), order.end(), rng.engine());
  std::size_t n_val = static_cast<std::size_t>(std::llround(validation_fraction * n_scans));
  if (n_scans > 1) n_val = std::clamp<std::size_t>(n_val, 1, n_scans - 1);
  else n_val = 0;
  ScanSplit split;
  split.validation.assign(order.begin(), order.begin() + n_val);
  split.train.assign(order.begin() + n_val, order.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

template <typename T>
TrainResult train_model(ModelGraph<T>& graph, std::span<const SampleRef> train,
                        std::span<const SampleRef> validation, const BatchFn<T>& batch_fn,
                        ValidationMetric metric, const TrainConfig& config) {
  config.validate();
  require(!train.empty(), ErrorKind::kInvalidArgument, "train: no training samples");
  Rng init_rng(derive_seed(config.seed, kInitStream));
  graph.initialize(init_rng, config.init);
  Rng shuffle_rng(derive_seed(config.seed, kShuffleStream));
  Rng dropout_rng(derive_seed(config.seed, kDropoutStream));
  SgdMomentum<T> optimizer(config.momentum);

  TrainResult result;
  result.best_metric = metric == ValidationMetric::kLoss ? INFINITY : -INFINITY;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t stale = 0;
  std::vector<SampleRef> batch;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double lr = config.learning_rate(epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      for (std::size_t i = start; i < end; ++i) batch.push_back(train[order[i]]);
      BatchOutcome<T> out = batch_fn(batch, Mode::kTrain, dropout_rng);
      const double loss = static_cast<double>(out.loss.item());
      require(std::isfinite(loss), ErrorKind::kDiverged,
              fmt::format("train: non-finite loss at epoch {} batch {}", epoch,
                          start / config.batch_size));
      loss_sum += loss * static_cast<double>(batch.size());
      backward(out.loss);
      optimizer.step(graph.parameters(), lr);
    }
    const double train_loss = loss_sum / static_cast<double>(train.size());

    double val_metric = train_loss;
    if (!validation.empty()) {
      NoGradGuard no_grad;
      double val_loss = 0.0;
      std::size_t correct = 0;
      for (std::size_t start = 0; start < validation.size(); start += config.batch_size) {
        const std::size_t end = std::min(validation.size(), start + config.batch_size);
        std::span<const SampleRef> chunk = validation.subspan(start, end - start);
        BatchOutcome<T> out = batch_fn(chunk, Mode::kInference, dropout_rng);
        val_loss += static_cast<double>(out.loss.item()) * static_cast<double>(chunk.size());
        correct += out.correct;
      }
      val_metric = metric == ValidationMetric::kLoss
                       ? val_loss / static_cast<double>(validation.size())
                       : static_cast<double>(correct) / static_cast<double>(validation.size());
    }
    result.history.push_back({epoch, lr, train_loss, val_metric});
    spdlog::info("epoch {} lr {} train_loss {:.6f} val {:.6f}", epoch, lr, train_loss, val_metric);

    if (result.best_epoch == 0 || improves(metric, val_metric, result.best_metric)) {
      result.best_metric = val_metric;
      result.best_epoch = epoch;
      result.best_state = graph.state();
      stale = 0;
    } else if (++stale >= config.patience) {
      result.early_stopped = true;
      break;
    }
    if (config.target_train_loss > 0.0 && train_loss < config.target_train_loss) break;
  }
  graph.load_state(result.best_state);
  return result;
}

void write_history(const std::filesystem::path& path, const TrainResult& result, std::uint64_t seed) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write history " + path.string());
  out << "# seed=" << seed << '\n' << "epoch,lr,train_loss,val_metric\n";
  for (const auto& r : result.history) {
    out << fmt::format("{},{},{},{}\n", r.epoch, r.lr, r.train_loss, r.val_metric);
  }
}

template TrainResult train_model(ModelGraph<float>&, std::span<const SampleRef>,
                                 std::span<const SampleRef>, const BatchFn<float>&,
                                 ValidationMetric, const TrainConfig&);
template TrainResult train_model(ModelGraph<double>&, std::span<const SampleRef>,
                                 std::span<const SampleRef>, const BatchFn<double>&,
                                 ValidationMetric, const TrainConfig&);

}  // namespace noduleforge
