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

#include "noduleforge/model/graph.hpp"

#include <cmath>
#include <sstream>

#include "noduleforge/core/error.hpp"

namespace noduleforge {

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kInput: return "input";
    case LayerKind::kConv: return "conv";
    case LayerKind::kConvTranspose: return "conv_transpose";
    case LayerKind::kBatchNorm: return "batchnorm";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kSigmoid: return "sigmoid";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kConcat: return "concat";
    case LayerKind::kEnlarge: return "enlarge";
  }
  return "?";
}

std::string FeatureShape::str() const {
  std::ostringstream out;
  out << channels << 'x' << spatial[0] << 'x' << spatial[1] << 'x' << spatial[2];
  return out.str();
}

InitScheme parse_init_scheme(const std::string& name) {
  if (name == "scaled_normal") return InitScheme::kScaledNormal;
  if (name == "standard_normal") return InitScheme::kStandardNormal;
  if (name == "he") return InitScheme::kHe;
  fail(ErrorKind::kInvalidArgument, "unknown init scheme '" + name + "'");
}

const char* to_string(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::kScaledNormal: return "scaled_normal";
    case InitScheme::kStandardNormal: return "standard_normal";
    case InitScheme::kHe: return "he";
  }
  return "?";
}

template <typename T>
int ModelGraph<T>::append(Layer layer) {
  require(!by_name_.count(layer.name), ErrorKind::kInvalidArgument,
          "graph: duplicate layer name '" + layer.name + "'");
  const int id = static_cast<int>(layers_.size());
  by_name_[layer.name] = id;
  layers_.push_back(std::move(layer));
  return id;
}

template <typename T>
const Layer& ModelGraph<T>::checked(int id, const char* op) const {
  require(id >= 0 && static_cast<std::size_t>(id) < layers_.size(), ErrorKind::kInvalidArgument,
          std::string("graph: ") + op + " refers to unknown layer " + std::to_string(id));
  return layers_[static_cast<std::size_t>(id)];
}

template <typename T>
Tensor<T>& ModelGraph<T>::add_param(const std::string& name, Shape shape) {
  param_index_[name] = params_.size();
  param_names_.push_back(name);
  params_.push_back(Tensor<T>::zeros(std::move(shape), true));
  return params_.back();
}

template <typename T>
Tensor<T>& ModelGraph<T>::add_buffer(const std::string& name, Shape shape, T fill) {
  auto [it, inserted] = buffers_.emplace(name, Tensor<T>(Array<T>(std::move(shape), fill)));
  return it->second;
}

template <typename T>
int ModelGraph<T>::find(const std::string& name) const {
  auto it = by_name_.find(name);
  require(it != by_name_.end(), ErrorKind::kInvalidArgument, "graph: no layer '" + name + "'");
  return it->second;
}

template <typename T>
int ModelGraph<T>::input(const std::string& name, FeatureShape shape) {
  Layer layer{name, LayerKind::kInput, {}, {}, 0.0, shape};
  const int id = append(std::move(layer));
  inputs_.push_back(id);
  return id;
}

template <typename T>
int ModelGraph<T>::conv(const std::string& name, int in, const ConvSpec& spec, bool bias) {
  spec.validate();
  const FeatureShape& s = checked(in, "conv").shape;
  FeatureShape out{spec.out_channels, {}};
  for (std::size_t a = 0; a < 3; ++a) out.spatial[a] = spec.output_extent(s.spatial[a], a);
  add_param(name + ".weight",
            {spec.out_channels, s.channels, spec.kernel[0], spec.kernel[1], spec.kernel[2]});
  if (bias) add_param(name + ".bias", {spec.out_channels});
  return append({name, LayerKind::kConv, {in}, spec, 0.0, out});
}

template <typename T>
int ModelGraph<T>::conv_transpose(const std::string& name, int in, const ConvSpec& spec,
                                  bool bias) {
  spec.validate();
  const FeatureShape& s = checked(in, "conv_transpose").shape;
  FeatureShape out{spec.out_channels, {}};
  for (std::size_t a = 0; a < 3; ++a) out.spatial[a] = s.spatial[a] * spec.stride;
  add_param(name + ".weight",
            {s.channels, spec.out_channels, spec.kernel[0], spec.kernel[1], spec.kernel[2]});
  if (bias) add_param(name + ".bias", {spec.out_channels});
  return append({name, LayerKind::kConvTranspose, {in}, spec, 0.0, out});
}

template <typename T>
int ModelGraph<T>::batchnorm(const std::string& name, int in) {
  const FeatureShape s = checked(in, "batchnorm").shape;
  add_param(name + ".gamma", {s.channels});
  add_param(name + ".beta", {s.channels});
  add_buffer(name + ".running_mean", {s.channels}, T{0});
  add_buffer(name + ".running_var", {s.channels}, T{1});
  return append({name, LayerKind::kBatchNorm, {in}, {}, 0.0, s});
}

template <typename T>
int ModelGraph<T>::relu(const std::string& name, int in) {
  return append({name, LayerKind::kRelu, {in}, {}, 0.0, checked(in, "relu").shape});
}

template <typename T>
int ModelGraph<T>::sigmoid(const std::string& name, int in) {
  return append({name, LayerKind::kSigmoid, {in}, {}, 0.0, checked(in, "sigmoid").shape});
}

template <typename T>
int ModelGraph<T>::maxpool(const std::string& name, int in) {
  FeatureShape s = checked(in, "maxpool").shape;
  for (auto& e : s.spatial) e = (e + 1) / 2;
  return append({name, LayerKind::kMaxPool, {in}, {}, 0.0, s});
}

template <typename T>
int ModelGraph<T>::dropout(const std::string& name, int in, double p) {
  require(p >= 0.0 && p < 1.0, ErrorKind::kInvalidArgument, "graph: dropout p must be in [0, 1)");
  return append({name, LayerKind::kDropout, {in}, {}, p, checked(in, "dropout").shape});
}

template <typename T>
int ModelGraph<T>::concat(const std::string& name, const std::vector<int>& ins) {
  require(!ins.empty(), ErrorKind::kInvalidArgument, "graph: concat needs inputs");
  FeatureShape out = checked(ins[0], "concat").shape;
  out.channels = 0;
  for (int id : ins) {
    const FeatureShape& s = checked(id, "concat").shape;
    require(s.spatial == out.spatial, ErrorKind::kShapeMismatch,
            "graph: concat '" + name + "' operand " + layer(id).name + " has spatial " + s.str() +
                ", expected " + out.str());
    out.channels += s.channels;
  }
  return append({name, LayerKind::kConcat, ins, {}, 0.0, out});
}

template <typename T>
int ModelGraph<T>::enlarge(const std::string& name, int in) {
  FeatureShape s = checked(in, "enlarge").shape;
  for (auto& e : s.spatial) e *= 2;
  return append({name, LayerKind::kEnlarge, {in}, {}, 0.0, s});
}

template <typename T>
std::vector<Tensor<T>> ModelGraph<T>::forward(std::span<const Tensor<T>> inputs, Mode mode,
                                              Rng* rng) const {
  require(inputs.size() == inputs_.size(), ErrorKind::kInvalidArgument,
          "graph: expected " + std::to_string(inputs_.size()) + " inputs, got " +
              std::to_string(inputs.size()));
  // Last consumer of each layer, so intermediate handles can be dropped early.
  std::vector<std::size_t> last_use(layers_.size(), 0);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (int in : layers_[i].inputs) last_use[static_cast<std::size_t>(in)] = i;
  }
  for (int out : outputs_) last_use[static_cast<std::size_t>(out)] = layers_.size();

  std::vector<Tensor<T>> values(layers_.size());
  std::size_t next_input = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& L = layers_[i];
    auto arg = [&](std::size_t k) -> const Tensor<T>& {
      return values[static_cast<std::size_t>(L.inputs[k])];
    };
    auto param = [&](const std::string& suffix) -> const Tensor<T>* {
      auto it = param_index_.find(L.name + suffix);
      return it == param_index_.end() ? nullptr : &params_[it->second];
    };
    switch (L.kind) {
      case LayerKind::kInput: {
        const Tensor<T>& x = inputs[next_input++];
        const Shape& s = x.shape();
        const std::size_t base = s.size() == 5 ? 1 : 0;
        require((s.size() == 4 || s.size() == 5) && s[base] == L.shape.channels &&
                    s[base + 1] == L.shape.spatial[0] && s[base + 2] == L.shape.spatial[1] &&
                    s[base + 3] == L.shape.spatial[2],
                ErrorKind::kShapeMismatch,
                "graph: input '" + L.name + "' expects " + L.shape.str() + ", got " +
                    shape_string(s));
        values[i] = x;
        break;
      }
      case LayerKind::kConv:
        values[i] = ops::conv3d(arg(0), *param(".weight"), param(".bias"), L.conv);
        break;
      case LayerKind::kConvTranspose:
        values[i] = ops::conv_transpose3d(arg(0), *param(".weight"), param(".bias"), L.conv);
        break;
      case LayerKind::kBatchNorm:
        values[i] = ops::batchnorm3d(arg(0), *param(".gamma"), *param(".beta"),
                                     buffers_.at(L.name + ".running_mean"),
                                     buffers_.at(L.name + ".running_var"), mode);
        break;
      case LayerKind::kRelu: values[i] = ops::relu(arg(0)); break;
      case LayerKind::kSigmoid: values[i] = ops::sigmoid(arg(0)); break;
      case LayerKind::kMaxPool: values[i] = ops::maxpool3d(arg(0)).output; break;
      case LayerKind::kDropout:
        if (mode == Mode::kTrain) {
          require(rng != nullptr, ErrorKind::kInvalidArgument,
                  "graph: dropout in training mode needs an rng");
          values[i] = ops::dropout(arg(0), L.dropout_p, mode, *rng);
        } else {
          values[i] = arg(0);
        }
        break;
      case LayerKind::kConcat: {
        std::vector<Tensor<T>> parts;
        for (std::size_t k = 0; k < L.inputs.size(); ++k) parts.push_back(arg(k));
        values[i] = ops::concat_channels<T>(parts);
        break;
      }
      case LayerKind::kEnlarge: values[i] = ops::enlarge2x(arg(0)); break;
    }
    for (int in : L.inputs) {
      if (last_use[static_cast<std::size_t>(in)] == i) values[static_cast<std::size_t>(in)] = {};
    }
  }
  std::vector<Tensor<T>> result;
  for (int out : outputs_) result.push_back(values[static_cast<std::size_t>(out)]);
  return result;
}

template <typename T>
std::string ModelGraph<T>::trace() const {
  std::ostringstream out;
  for (const Layer& L : layers_) {
    out << L.name << ' ' << to_string(L.kind) << " in=";
    if (L.inputs.empty()) out << '-';
    for (std::size_t k = 0; k < L.inputs.size(); ++k) {
      if (k) out << '+';
      out << shape(L.inputs[k]).str();
    }
    out << " out=" << L.shape.str();
    if (L.kind == LayerKind::kConv || L.kind == LayerKind::kConvTranspose) {
      out << " k=" << L.conv.kernel[0] << " d=" << L.conv.dilation << " s=" << L.conv.stride;
    }
    out << '\n';
  }
  return out.str();
}

template <typename T>
void ModelGraph<T>::initialize(Rng& rng, InitScheme scheme) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const std::string& name = param_names_[i];
    Array<T>& a = params_[i].mutable_array();
    const auto dot = name.rfind('.');
    const std::string suffix = name.substr(dot + 1);
    if (suffix == "bias" || suffix == "beta") {
      a.fill(T{0});
    } else if (suffix == "gamma") {
      a.fill(T{1});
    } else {
      const Layer& L = layer(find(name.substr(0, dot)));
      double sd = 1.0;
      if (scheme == InitScheme::kScaledNormal) {
        sd = 0.01;
      } else if (scheme == InitScheme::kHe) {
        const double taps = static_cast<double>(L.conv.taps());
        double fan_in = L.kind == LayerKind::kConvTranspose
                            ? static_cast<double>(a.extent(0)) * taps /
                                  std::pow(static_cast<double>(L.conv.stride), 3)
                            : static_cast<double>(a.extent(1)) * taps;
        sd = std::sqrt(2.0 / std::max(1.0, fan_in));
      }
      for (auto& v : a.values()) v = static_cast<T>(rng.normal(0.0, sd));
    }
  }
  for (auto& [name, buffer] : buffers_) {
    const bool is_var = name.size() >= 4 && name.compare(name.size() - 3, 3, "var") == 0;
    buffer.mutable_array().fill(is_var ? T{1} : T{0});
  }
}

template <typename T>
std::size_t ModelGraph<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

template <typename T>
Tensor<T>& ModelGraph<T>::parameter(const std::string& name) {
  auto it = param_index_.find(name);
  require(it != param_index_.end(), ErrorKind::kInvalidArgument,
          "graph: no parameter '" + name + "'");
  return params_[it->second];
}

template <typename T>
std::vector<CheckpointRecord> ModelGraph<T>::state() const {
  std::vector<CheckpointRecord> records;
  auto push = [&](const std::string& name, const Array<T>& a) {
    std::vector<float> v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = static_cast<float>(a[i]);
    records.push_back({name, Array<float>(a.shape(), std::move(v))});
  };
  for (std::size_t i = 0; i < params_.size(); ++i) push(param_names_[i], params_[i].array());
  for (const auto& [name, buffer] : buffers_) push(name, buffer.array());
  return records;
}

template <typename T>
void ModelGraph<T>::load_state(const std::vector<CheckpointRecord>& records) {
  require(records.size() == params_.size() + buffers_.size(), ErrorKind::kSchemaMismatch,
          "checkpoint: expected " + std::to_string(params_.size() + buffers_.size()) +
              " records, got " + std::to_string(records.size()));
  for (const auto& r : records) {
    Array<T>* target = nullptr;
    if (auto it = param_index_.find(r.name); it != param_index_.end()) {
      target = &params_[it->second].mutable_array();
    } else if (auto b = buffers_.find(r.name); b != buffers_.end()) {
      target = &b->second.mutable_array();
    }
    require(target != nullptr, ErrorKind::kSchemaMismatch,
            "checkpoint: unexpected tensor '" + r.name + "'");
    require(target->shape() == r.values.shape(), ErrorKind::kSchemaMismatch,
            "checkpoint: '" + r.name + "' has shape " + shape_string(r.values.shape()) +
                ", model expects " + shape_string(target->shape()));
    for (std::size_t i = 0; i < target->size(); ++i) (*target)[i] = static_cast<T>(r.values[i]);
  }
}

template class ModelGraph<float>;
template class ModelGraph<double>;

}  // namespace noduleforge
