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

#include "noduleforge/model/model_file.hpp"

#include <algorithm>
#include <cmath>

#include "noduleforge/core/checkpoint.hpp"
#include "noduleforge/core/error.hpp"

namespace noduleforge {
namespace {

constexpr const char* kGrowth = "arch.growth";
constexpr const char* kPatch = "arch.patch";
constexpr const char* kDropout = "arch.dropout";

CheckpointRecord scalar_record(const char* name, float value) {
  return {name, Array<float>({1}, std::vector<float>{value})};
}

CheckpointRecord growth_record(const std::array<std::size_t, 4>& growth) {
  std::vector<float> v(growth.begin(), growth.end());
  return {kGrowth, Array<float>({4}, std::move(v))};
}

// Splits the arch records off; the rest are model parameters.
std::vector<CheckpointRecord> take_arch(std::vector<CheckpointRecord>& records) {
  std::vector<CheckpointRecord> arch;
  auto it = std::stable_partition(records.begin(), records.end(), [](const CheckpointRecord& r) {
    return r.name.rfind("arch.", 0) != 0;
  });
  arch.assign(std::make_move_iterator(it), std::make_move_iterator(records.end()));
  records.erase(it, records.end());
  return arch;
}

const Array<float>& find(const std::vector<CheckpointRecord>& arch, const char* name,
                         std::size_t size, const std::filesystem::path& path) {
  for (const auto& r : arch) {
    if (r.name == name) {
      require(r.values.size() == size, ErrorKind::kSchemaMismatch,
              path.string() + ": malformed " + name);
      return r.values;
    }
  }
  fail(ErrorKind::kSchemaMismatch, path.string() + ": missing " + name);
}

std::size_t as_size(float v, const std::filesystem::path& path) {
  require(v >= 0.0f && std::floor(v) == v, ErrorKind::kSchemaMismatch,
          path.string() + ": non-integral architecture value");
  return static_cast<std::size_t>(v);
}

std::array<std::size_t, 4> read_growth(const std::vector<CheckpointRecord>& arch,
                                       const std::filesystem::path& path) {
  const auto& g = find(arch, kGrowth, 4, path);
  return {as_size(g[0], path), as_size(g[1], path), as_size(g[2], path), as_size(g[3], path)};
}

}  // namespace

void save_prn(const std::filesystem::path& path, const ModelGraph<float>& graph,
              const PrnConfig& config) {
  auto records = graph.state();
  records.push_back(growth_record(config.growth));
  records.push_back(scalar_record(kPatch, static_cast<float>(config.patch)));
  write_checkpoint(path, records);
}

void save_hsn(const std::filesystem::path& path, const ModelGraph<float>& graph,
              const HsnConfig& config) {
  auto records = graph.state();
  records.push_back(growth_record(config.growth));
  records.push_back(scalar_record(kPatch, static_cast<float>(config.patch)));
  records.push_back(scalar_record(kDropout, static_cast<float>(config.dropout)));
  write_checkpoint(path, records);
}

LoadedModel<PrnConfig> load_prn(const std::filesystem::path& path) {
  auto records = read_checkpoint(path);
  const auto arch = take_arch(records);
  PrnConfig config;
  config.growth = read_growth(arch, path);
  config.patch = as_size(find(arch, kPatch, 1, path)[0], path);
  config.validate();
  LoadedModel<PrnConfig> m{build_prn<float>(config), config};
  m.graph.load_state(records);
  return m;
}

LoadedModel<HsnConfig> load_hsn(const std::filesystem::path& path) {
  auto records = read_checkpoint(path);
  const auto arch = take_arch(records);
  HsnConfig config;
  config.growth = read_growth(arch, path);
  config.patch = as_size(find(arch, kPatch, 1, path)[0], path);
  config.dropout = find(arch, kDropout, 1, path)[0];
  config.validate();
  LoadedModel<HsnConfig> m{build_hsn<float>(config), config};
  m.graph.load_state(records);
  return m;
}

}  // namespace noduleforge
