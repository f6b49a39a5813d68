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

#include "noduleforge/train/tasks.hpp"

#include <spdlog/spdlog.h>

#include "noduleforge/core/error.hpp"
#include "noduleforge/preprocess/intensity.hpp"
#include "noduleforge/preprocess/lung_mask.hpp"

namespace noduleforge {
namespace {

enum Stream : std::uint64_t { kTrainSamples = 11, kValidationSamples = 12 };

template <typename T>
void copy_into(const Array<float>& src, T* dst) {
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<T>(src[i]);
}

Shape batch_shape(std::size_t n, std::size_t edge) { return {n, 1, edge, edge, edge}; }

}  // namespace

template <typename T>
BatchFn<T> prn_batch_fn(const ModelGraph<T>& prn, const std::vector<ScanData>& scans,
                        std::size_t patch) {
  return [&prn, &scans, patch](std::span<const SampleRef> batch, Mode mode, Rng& rng) {
    const std::size_t voxels = patch * patch * patch;
    Array<T> input(batch_shape(batch.size(), patch));
    Array<T> target(batch_shape(batch.size(), patch));
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const SampleRef& s = batch[i];
      const ScanData& scan = scans.at(s.scan);
      copy_into(apply_transform(extract_patch(scan.volume, s.center, patch), s.transform),
                input.data() + i * voxels);
      copy_into(apply_transform(make_prn_target(scan.volume, scan.annotations, s.center, patch),
                                s.transform),
                target.data() + i * voxels);
    }
    Tensor<T> x(std::move(input));
    auto out = prn.forward(std::span<const Tensor<T>>(&x, 1), mode, &rng);
    return BatchOutcome<T>{ops::bce(out[0], target), 0};
  };
}

std::array<Array<float>, 3> hsn_inputs(const Volume& volume, const VoxelIndex& center,
                                       ZTransform transform) {
  const WorldPoint w = voxel_to_world(volume, {static_cast<double>(center[0]),
                                                    static_cast<double>(center[1]),
                                                    static_cast<double>(center[2])});
  ConcentricPatches crops = crop_concentric(volume, w, kMaskPadHu);
  std::array<Array<float>, 3> out;
  for (std::size_t k = 0; k < 3; ++k) {
    normalize_hu(crops.patches[k].values());
    out[k] = apply_transform(crops.patches[k], transform);
  }
  return out;
}

template <typename T>
BatchFn<T> hsn_batch_fn(const ModelGraph<T>& hsn, const std::vector<ScanData>& scans) {
  return [&hsn, &scans](std::span<const SampleRef> batch, Mode mode, Rng& rng) {
    const std::size_t edge = kConcentricSizes[0];
    const std::size_t voxels = edge * edge * edge;
    std::array<Array<T>, 3> inputs;
    for (auto& a : inputs) a = Array<T>(batch_shape(batch.size(), edge));
    std::vector<T> labels(batch.size()), diameters(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const SampleRef& s = batch[i];
      auto crops = hsn_inputs(scans.at(s.scan).volume, s.center, s.transform);
      for (std::size_t k = 0; k < 3; ++k) copy_into(crops[k], inputs[k].data() + i * voxels);
      labels[i] = static_cast<T>(s.label);
      diameters[i] = static_cast<T>(s.diameter_mm);
    }
    std::vector<Tensor<T>> xs;
    for (auto& a : inputs) xs.emplace_back(std::move(a));
    auto out = hsn.forward(xs, mode, &rng);
    BatchOutcome<T> outcome{hsn_loss(out[0], out[1], std::span<const T>(labels),
                                     std::span<const T>(diameters)),
                            0};
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const bool predicted = out[0].values()[i] >= T{0.5};
      outcome.correct += predicted == (labels[i] == T{1});
    }
    return outcome;
  };
}

namespace {

template <typename Build>
TrainedModel<float> train_task(const std::vector<ScanData>& scans, const TrainConfig& config,
                               ModelGraph<float> graph, ValidationMetric metric,
                               const Build& make_fn, const char* label) {
  config.validate();
  require(!scans.empty(), ErrorKind::kMissingInput, std::string(label) + ": no scans");
  const ScanSplit split = split_scans(scans.size(), config.validation_fraction, config.seed);
  Rng train_rng(derive_seed(config.seed, kTrainSamples));
  Rng val_rng(derive_seed(config.seed, kValidationSamples));
  const std::vector<SampleRef> train = build_sample_set(scans, split.train, config.samples, train_rng).all();
  const std::vector<SampleRef> val = build_sample_set(scans, split.validation, config.samples, val_rng).all();
  spdlog::info("{}: {} train scans ({} samples), {} validation scans ({} samples)", label,
               split.train.size(), train.size(), split.validation.size(), val.size());
  TrainedModel<float> trained{std::move(graph), {}, train.size(), val.size()};
  const BatchFn<float> fn = make_fn(trained.graph);
  trained.result = train_model(trained.graph, std::span<const SampleRef>(train),
                               std::span<const SampleRef>(val), fn, metric, config);
  return trained;
}

}  // namespace

TrainedModel<float> train_prn(const std::vector<ScanData>& scans, const PrnConfig& model,
                              const TrainConfig& config) {
  return train_task(scans, config, build_prn<float>(model), ValidationMetric::kLoss,
                    [&](const ModelGraph<float>& g) { return prn_batch_fn(g, scans, model.patch); },
                    "train-prn");
}

TrainedModel<float> train_hsn(const std::vector<ScanData>& scans, const HsnConfig& model,
                              const TrainConfig& config) {
  return train_task(scans, config, build_hsn<float>(model), ValidationMetric::kAccuracy,
                    [&](const ModelGraph<float>& g) { return hsn_batch_fn(g, scans); },
                    "train-hsn");
}

template BatchFn<float> prn_batch_fn(const ModelGraph<float>&, const std::vector<ScanData>&,
                                     std::size_t);
template BatchFn<double> prn_batch_fn(const ModelGraph<double>&, const std::vector<ScanData>&,
                                      std::size_t);
template BatchFn<float> hsn_batch_fn(const ModelGraph<float>&, const std::vector<ScanData>&);
template BatchFn<double> hsn_batch_fn(const ModelGraph<double>&, const std::vector<ScanData>&);

}  // namespace noduleforge
