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

#include "noduleforge/io/volume.hpp"

namespace noduleforge {

struct Annotation {
  std::string series_id;
  WorldPoint center;
  double diameter_mm = 0.0;
};

struct CandidateRecord {
  std::string series_id;
  WorldPoint center;
  double probability = 0.0;
  double diameter_mm = 0.0;
};

inline constexpr const char* kAnnotationHeader = "seriesuid,coordX,coordY,coordZ,diameter_mm";
inline constexpr const char* kCandidateHeader =
    "seriesuid,coordX,coordY,coordZ,probability,diameter_mm";

std::vector<Annotation> read_annotations(const std::filesystem::path& path);
void write_annotations(const std::vector<Annotation>& rows, const std::filesystem::path& path);

std::vector<CandidateRecord> read_candidates(const std::filesystem::path& path);
void write_candidates(const std::vector<CandidateRecord>& rows,
                      const std::filesystem::path& path);

}  // namespace noduleforge
