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

#include "noduleforge/io/tables.hpp"

#include <charconv>
#include <fstream>

#include <fmt/format.h>

#include "noduleforge/core/error.hpp"

namespace noduleforge {
namespace {

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(strip(line.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_number(const std::string& field, const std::filesystem::path& path, std::size_t line) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  require(ec == std::errc() && ptr == end && !field.empty(), ErrorKind::kSchemaMismatch,
          fmt::format("{}:{}: malformed number '{}'", path.string(), line, field));
  return value;
}

// Calls `row(fields, line_number)` for every non-blank data line.
template <typename F>
void read_rows(const std::filesystem::path& path, const char* expected_header,
               std::size_t columns, F&& row) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kMissingInput, "cannot open table " + path.string());
  std::string line;
  std::size_t number = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++number;
    const std::string text = strip(line);
    if (text.empty()) continue;
    if (!seen_header) {
      require(text == expected_header, ErrorKind::kSchemaMismatch,
              fmt::format("{}:{}: expected header '{}'", path.string(), number, expected_header));
      seen_header = true;
      continue;
    }
    auto fields = split(text);
    require(fields.size() == columns, ErrorKind::kSchemaMismatch,
            fmt::format("{}:{}: expected {} fields, got {}", path.string(), number, columns,
                        fields.size()));
    row(fields, number);
  }
  require(seen_header, ErrorKind::kSchemaMismatch, path.string() + ": missing header");
}

std::ofstream open_output(const std::filesystem::path& path, const char* header) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write table " + path.string());
  out << header << '\n';
  return out;
}

}  // namespace

std::vector<Annotation> read_annotations(const std::filesystem::path& path) {
  std::vector<Annotation> rows;
  read_rows(path, kAnnotationHeader, 5, [&](const std::vector<std::string>& f, std::size_t line) {
    Annotation a;
    a.series_id = f[0];
    a.center = {parse_number(f[1], path, line), parse_number(f[2], path, line),
                parse_number(f[3], path, line)};
    a.diameter_mm = parse_number(f[4], path, line);
    require(a.diameter_mm > 0.0, ErrorKind::kSchemaMismatch,
            fmt::format("{}:{}: diameter must be positive", path.string(), line));
    rows.push_back(std::move(a));
  });
  return rows;
}

void write_annotations(const std::vector<Annotation>& rows, const std::filesystem::path& path) {
  auto out = open_output(path, kAnnotationHeader);
  for (const auto& a : rows) {
    out << fmt::format("{},{},{},{},{}\n", a.series_id, a.center.x, a.center.y, a.center.z,
                       a.diameter_mm);
  }
  require(static_cast<bool>(out), ErrorKind::kIo, "write failed for " + path.string());
}

std::vector<CandidateRecord> read_candidates(const std::filesystem::path& path) {
  std::vector<CandidateRecord> rows;
  read_rows(path, kCandidateHeader, 6, [&](const std::vector<std::string>& f, std::size_t line) {
    CandidateRecord c;
    c.series_id = f[0];
    c.center = {parse_number(f[1], path, line), parse_number(f[2], path, line),
                parse_number(f[3], path, line)};
    c.probability = parse_number(f[4], path, line);
    c.diameter_mm = parse_number(f[5], path, line);
    rows.push_back(std::move(c));
  });
  return rows;
}

void write_candidates(const std::vector<CandidateRecord>& rows,
                      const std::filesystem::path& path) {
  auto out = open_output(path, kCandidateHeader);
  for (const auto& c : rows) {
    out << fmt::format("{},{},{},{},{},{}\n", c.series_id, c.center.x, c.center.y, c.center.z,
                       c.probability, c.diameter_mm);
  }
  require(static_cast<bool>(out), ErrorKind::kIo, "write failed for " + path.string());
}

}  // namespace noduleforge
