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

#include <cstdint>
#include <string>

#include "noduleforge/detect/detector.hpp"
#include "noduleforge/io/config_file.hpp"
#include "noduleforge/model/hsn.hpp"
#include "noduleforge/model/prn.hpp"
#include "noduleforge/phantom/phantom.hpp"
#include "noduleforge/train/trainer.hpp"

namespace noduleforge {

/// Typed views of a resolved `key = value` run configuration.
///
///   workers, seed
///   phantom.{extent, min_nodules, max_nodules, min_diameter_mm, max_diameter_mm, noise_sigma_hu}
///   prn.model.{growth, patch}   hsn.model.{growth, dropout}
///   prn.<training key>          hsn.<training key>
///   detect.{patch, stride, threshold, min_voxels}
///
/// Growth schedules are four comma-separated integers. Models default to the
/// tiny schedules; `growth = full` selects the full-size ones.
std::size_t workers_of(const ConfigFile& config);
std::uint64_t seed_of(const ConfigFile& config);

PhantomSpec phantom_spec(const ConfigFile& config);
PrnConfig prn_model_config(const ConfigFile& config);
HsnConfig hsn_model_config(const ConfigFile& config);

/// Training overrides under `prefix` ("prn." or "hsn."); the seed defaults to
/// the global one.
TrainConfig train_config(const ConfigFile& config, const std::string& prefix);

DetectorConfig detector_config(const ConfigFile& config, std::size_t default_patch);

}  // namespace noduleforge
