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

#include <filesystem>

#include "noduleforge/model/hsn.hpp"
#include "noduleforge/model/prn.hpp"

namespace noduleforge {

/// Checkpoints with the architecture stored alongside the parameters as
/// `arch.*` records, so a model can be rebuilt from the file alone.
void save_prn(const std::filesystem::path& path, const ModelGraph<float>& graph,
              const PrnConfig& config);
void save_hsn(const std::filesystem::path& path, const ModelGraph<float>& graph,
              const HsnConfig& config);

template <typename Config>
struct LoadedModel {
  ModelGraph<float> graph;
  Config config;
};

LoadedModel<PrnConfig> load_prn(const std::filesystem::path& path);
LoadedModel<HsnConfig> load_hsn(const std::filesystem::path& path);

}  // namespace noduleforge
