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

#include "noduleforge/cli/run_config.hpp"

#include <sstream>

#include "noduleforge/core/error.hpp"

namespace noduleforge {
namespace {

std::size_t get_size(const ConfigFile& c, const std::string& key, std::size_t fallback) {
  const long v = c.get_int(key, static_cast<long>(fallback));
  require(v >= 0, ErrorKind::kInvalidArgument, "config: " + key + " must be non-negative");
  return static_cast<std::size_t>(v);
}

std::array<std::size_t, 4> parse_growth(const std::string& text) {
  std::array<std::size_t, 4> g{};
  std::stringstream ss(text);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    require(i < 4, ErrorKind::kInvalidArgument, "config: growth needs four values: " + text);
    try {
      g[i++] = static_cast<std::size_t>(std::stoul(item));
    } catch (const std::exception&) {
      fail(ErrorKind::kInvalidArgument, "config: growth needs four integers: " + text);
    }
  }
  require(i == 4, ErrorKind::kInvalidArgument, "config: growth needs four values: " + text);
  return g;
}

}  // namespace

std::size_t workers_of(const ConfigFile& config) {
  const std::size_t w = get_size(config, "workers", 1);
  require(w >= 1, ErrorKind::kInvalidArgument, "config: workers must be at least 1");
  return w;
}

std::uint64_t seed_of(const ConfigFile& config) {
  return static_cast<std::uint64_t>(config.get_int("seed", 0));
}

PhantomSpec phantom_spec(const ConfigFile& c) {
  PhantomSpec s;
  const std::size_t edge = get_size(c, "phantom.extent", s.extents[0]);
  s.extents = {edge, edge, edge};
  s.min_nodules = get_size(c, "phantom.min_nodules", s.min_nodules);
  s.max_nodules = get_size(c, "phantom.max_nodules", s.max_nodules);
  s.min_diameter_mm = c.get_double("phantom.min_diameter_mm", s.min_diameter_mm);
  s.max_diameter_mm = c.get_double("phantom.max_diameter_mm", s.max_diameter_mm);
  s.noise_sigma_hu = c.get_double("phantom.noise_sigma_hu", s.noise_sigma_hu);
  s.validate();
  return s;
}

PrnConfig prn_model_config(const ConfigFile& c) {
  PrnConfig m = PrnConfig::tiny(get_size(c, "prn.model.patch", 32));
  if (auto g = c.get("prn.model.growth")) m.growth = *g == "full" ? PrnConfig::full().growth : parse_growth(*g);
  m.validate();
  return m;
}

HsnConfig hsn_model_config(const ConfigFile& c) {
  HsnConfig m = HsnConfig::tiny();
  if (auto g = c.get("hsn.model.growth")) m.growth = *g == "full" ? HsnConfig::full().growth : parse_growth(*g);
  m.dropout = c.get_double("hsn.model.dropout", m.dropout);
  m.validate();
  return m;
}

TrainConfig train_config(const ConfigFile& config, const std::string& prefix) {
  ConfigFile c = config;
  if (!c.contains(prefix + "seed")) c.set(prefix + "seed", std::to_string(seed_of(config)));
  TrainConfig t;
  t.apply(c, prefix);
  return t;
}

DetectorConfig detector_config(const ConfigFile& c, std::size_t default_patch) {
  DetectorConfig d;
  d.patch = get_size(c, "detect.patch", default_patch);
  d.stride = get_size(c, "detect.stride", d.patch);
  d.threshold = static_cast<float>(c.get_double("detect.threshold", d.threshold));
  d.min_voxels = get_size(c, "detect.min_voxels", d.min_voxels);
  d.workers = workers_of(c);
  d.validate();
  return d;
}

}  // namespace noduleforge
