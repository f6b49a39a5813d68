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

#include "noduleforge/core/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "noduleforge/core/error.hpp"

namespace noduleforge {
namespace {

constexpr std::array<char, 4> kMagic{'N', 'D', 'F', '1'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }

bool get_u64(std::istream& in, std::uint64_t& v) {
  in.read(reinterpret_cast<char*>(&v), 8);
  return static_cast<bool>(in);
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::kIo, "checkpoint: cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  for (const auto& r : records) {
    put_u64(out, r.name.size());
    out.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
    put_u64(out, r.values.rank());
    for (auto e : r.values.shape()) put_u64(out, e);
    out.write(reinterpret_cast<const char*>(r.values.data()),
              static_cast<std::streamsize>(r.values.size() * sizeof(float)));
  }
  require(static_cast<bool>(out), ErrorKind::kIo, "checkpoint: write failed for " + path.string());
}

std::vector<CheckpointRecord> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kMissingInput, "checkpoint: cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  require(static_cast<bool>(in) && magic == kMagic, ErrorKind::kSchemaMismatch,
          "checkpoint: " + path.string() + " does not start with NDF1");
  std::vector<CheckpointRecord> records;
  while (in.peek() != std::char_traits<char>::eof()) {
    std::uint64_t name_len = 0, rank = 0;
    require(get_u64(in, name_len) && name_len < (1u << 20), ErrorKind::kSchemaMismatch,
            "checkpoint: truncated record header");
    CheckpointRecord r;
    r.name.resize(name_len);
    in.read(r.name.data(), static_cast<std::streamsize>(name_len));
    require(get_u64(in, rank) && rank <= 8, ErrorKind::kSchemaMismatch,
            "checkpoint: bad rank in record " + r.name);
    Shape shape(rank);
    for (auto& e : shape) {
      std::uint64_t v = 0;
      require(get_u64(in, v), ErrorKind::kSchemaMismatch, "checkpoint: truncated extents in " + r.name);
      e = v;
    }
    std::vector<float> values(element_count(shape));
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
    require(static_cast<bool>(in), ErrorKind::kSchemaMismatch, "checkpoint: truncated payload in " + r.name);
    r.values = Array<float>(std::move(shape), std::move(values));
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace noduleforge
