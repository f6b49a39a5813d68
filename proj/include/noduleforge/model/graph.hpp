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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "noduleforge/core/checkpoint.hpp"
#include "noduleforge/core/conv.hpp"
#include "noduleforge/core/ops.hpp"
#include "noduleforge/core/rng.hpp"
#include "noduleforge/core/tensor.hpp"

namespace noduleforge {

enum class LayerKind {
  kInput,
  kConv,
  kConvTranspose,
  kBatchNorm,
  kRelu,
  kSigmoid,
  kMaxPool,
  kDropout,
  kConcat,
  kEnlarge,
};

const char* to_string(LayerKind kind);

/// Per-sample feature-map shape: channels and (D, H, W).
struct FeatureShape {
  std::size_t channels = 0;
  std::array<std::size_t, 3> spatial{0, 0, 0};

  bool operator==(const FeatureShape&) const = default;
  std::string str() const;
};

enum class InitScheme {
  /// N(0, 1) scaled by 0.01.
  kScaledNormal,
  /// Unscaled N(0, 1).
  kStandardNormal,
  /// N(0, 2 / fan_in).
  kHe,
};

InitScheme parse_init_scheme(const std::string& name);
const char* to_string(InitScheme scheme);

struct Layer {
  std::string name;
  LayerKind kind = LayerKind::kInput;
  std::vector<int> inputs;
  ConvSpec conv;
  double dropout_p = 0.0;
  FeatureShape shape;
};

/// Declarative layer DAG with a named parameter store. Layers are appended
/// in topological order; every builder call infers and records the output
/// shape so channel and spatial traces are checkable at construction.
template <typename T>
class ModelGraph {
 public:
  int input(const std::string& name, FeatureShape shape);
  int conv(const std::string& name, int in, const ConvSpec& spec, bool bias = true);
  int conv_transpose(const std::string& name, int in, const ConvSpec& spec, bool bias = true);
  int batchnorm(const std::string& name, int in);
  int relu(const std::string& name, int in);
  int sigmoid(const std::string& name, int in);
  int maxpool(const std::string& name, int in);
  int dropout(const std::string& name, int in, double p);
  int concat(const std::string& name, const std::vector<int>& ins);
  int enlarge(const std::string& name, int in);
  void mark_output(int id) { outputs_.push_back(id); }

  const Layer& layer(int id) const { return layers_.at(static_cast<std::size_t>(id)); }
  const std::vector<Layer>& layers() const { return layers_; }
  const FeatureShape& shape(int id) const { return layer(id).shape; }
  int find(const std::string& name) const;
  const std::vector<int>& input_ids() const { return inputs_; }
  const std::vector<int>& output_ids() const { return outputs_; }

  /// Inputs are [C, D, H, W] or batched [N, C, D, H, W], in declaration
  /// order. Returns the marked outputs. `rng` is required for dropout in
  /// training mode.
  std::vector<Tensor<T>> forward(std::span<const Tensor<T>> inputs, Mode mode,
                                 Rng* rng = nullptr) const;

  /// One line per layer: name, kind, input shapes and output shape.
  std::string trace() const;

  void initialize(Rng& rng, InitScheme scheme);

  /// Trainable tensors in creation order.
  std::vector<Tensor<T>>& parameters() { return params_; }
  const std::vector<std::string>& parameter_names() const { return param_names_; }
  std::size_t parameter_count() const;
  Tensor<T>& parameter(const std::string& name);

  std::vector<CheckpointRecord> state() const;
  /// Loads parameters and buffers; names and shapes must match exactly.
  void load_state(const std::vector<CheckpointRecord>& records);

 private:
  int append(Layer layer);
  const Layer& checked(int id, const char* op) const;
  Tensor<T>& add_param(const std::string& name, Shape shape);
  Tensor<T>& add_buffer(const std::string& name, Shape shape, T fill);

  std::vector<Layer> layers_;
  std::vector<int> inputs_;
  std::vector<int> outputs_;
  std::map<std::string, int> by_name_;

  std::vector<Tensor<T>> params_;
  std::vector<std::string> param_names_;
  std::map<std::string, std::size_t> param_index_;
  // BatchNorm running statistics, mutable through const forward.
  mutable std::map<std::string, Tensor<T>> buffers_;
};

extern template class ModelGraph<float>;
extern template class ModelGraph<double>;

}  // namespace noduleforge
