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

#include "noduleforge/io/volume.hpp"

namespace noduleforge {

enum class MetaElementType { kUInt8, kInt16, kFloat32, kFloat64 };

/// Reads an uncompressed little-endian .mhd header and its detached payload.
/// The series id is taken from the header file stem.
Volume read_metaimage(const std::filesystem::path& header_path);

/// Writes `<stem>.mhd` plus `<stem>.raw` next to it. Values are converted to
/// `type`; float32 output is a lossless round trip.
void write_metaimage(const Volume& volume, const std::filesystem::path& header_path,
                     MetaElementType type = MetaElementType::kFloat32);

}  // namespace noduleforge
