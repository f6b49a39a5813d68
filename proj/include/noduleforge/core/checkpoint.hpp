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
#include <string>
#include <vector>

#include "noduleforge/core/tensor.hpp"

namespace noduleforge {

/// Flat binary parameter container:
///   "NDF1" then, per record, little-endian u64 name length, name bytes,
///   u64 rank, rank x u64 extents, and the raw f32 values.
struct CheckpointRecord {
  std::string name;
  Array<float> values;
};

void write_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointRecord>& records);
std::vector<CheckpointRecord> read_checkpoint(const std::filesystem::path& path);

}  // namespace noduleforge
