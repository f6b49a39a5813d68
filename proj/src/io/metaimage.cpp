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

#include "noduleforge/io/metaimage.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <limits>
#include <sstream>
#include <type_traits>

#include <fmt/format.h>

#include "noduleforge/core/error.hpp"

namespace noduleforge {
namespace {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

using Header = std::map<std::string, std::string>;

Header parse_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kMissingInput,
          "metaimage: cannot open header " + path.string());
  Header header;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    header[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return header;
}

const std::string& required(const Header& header, const std::string& key,
                            const std::filesystem::path& path) {
  auto it = header.find(key);
  require(it != header.end(), ErrorKind::kSchemaMismatch,
          "metaimage: missing key '" + key + "' in " + path.string());
  return it->second;
}

template <typename T>
std::array<T, 3> parse_triple(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::array<T, 3> out{};
  for (auto& v : out) {
    require(static_cast<bool>(in >> v), ErrorKind::kSchemaMismatch,
            "metaimage: " + key + " needs three values, got '" + text + "'");
  }
  return out;
}

bool is_true(const std::string& value) { return value == "True" || value == "true" || value == "1"; }

std::size_t element_size(MetaElementType type) {
  switch (type) {
    case MetaElementType::kUInt8: return 1;
    case MetaElementType::kInt16: return 2;
    case MetaElementType::kFloat32: return 4;
    case MetaElementType::kFloat64: return 8;
  }
  return 0;
}

const char* element_name(MetaElementType type) {
  switch (type) {
    case MetaElementType::kUInt8: return "MET_UCHAR";
    case MetaElementType::kInt16: return "MET_SHORT";
    case MetaElementType::kFloat32: return "MET_FLOAT";
    case MetaElementType::kFloat64: return "MET_DOUBLE";
  }
  return "";
}

MetaElementType parse_element_type(const std::string& name) {
  if (name == "MET_UCHAR") return MetaElementType::kUInt8;
  if (name == "MET_SHORT") return MetaElementType::kInt16;
  if (name == "MET_FLOAT") return MetaElementType::kFloat32;
  if (name == "MET_DOUBLE") return MetaElementType::kFloat64;
  fail(ErrorKind::kSchemaMismatch, "metaimage: unsupported ElementType '" + name + "'");
}

template <typename S>
void decode(const std::vector<char>& bytes, std::span<float> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    S v;
    std::memcpy(&v, bytes.data() + i * sizeof(S), sizeof(S));
    out[i] = static_cast<float>(v);
  }
}

template <typename S>
S convert(float value) {
  if constexpr (std::is_integral_v<S>) {
    const float lo = static_cast<float>(std::numeric_limits<S>::min());
    const float hi = static_cast<float>(std::numeric_limits<S>::max());
    return static_cast<S>(std::lround(std::clamp(value, lo, hi)));
  } else {
    return static_cast<S>(value);
  }
}

template <typename S>
void encode(std::span<const float> values, std::vector<char>& bytes) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    const S v = convert<S>(values[i]);
    std::memcpy(bytes.data() + i * sizeof(S), &v, sizeof(S));
  }
}

}  // namespace

Volume read_metaimage(const std::filesystem::path& header_path) {
  const Header header = parse_header(header_path);
  const int ndims = std::stoi(required(header, "NDims", header_path));
  require(ndims == 3, ErrorKind::kSchemaMismatch,
          "metaimage: NDims must be 3, got " + std::to_string(ndims));
  const auto dims = parse_triple<std::size_t>(required(header, "DimSize", header_path), "DimSize");
  const auto spacing =
      parse_triple<double>(required(header, "ElementSpacing", header_path), "ElementSpacing");
  const auto type = parse_element_type(required(header, "ElementType", header_path));
  const std::string data_file = required(header, "ElementDataFile", header_path);
  require(data_file != "LOCAL", ErrorKind::kSchemaMismatch,
          "metaimage: ElementDataFile = LOCAL is not supported");
  if (auto it = header.find("CompressedData"); it != header.end()) {
    require(!is_true(it->second), ErrorKind::kSchemaMismatch,
            "metaimage: compressed payloads are not supported");
  }
  for (const char* key : {"BinaryDataByteOrderMSB", "ElementByteOrderMSB"}) {
    if (auto it = header.find(key); it != header.end()) {
      require(!is_true(it->second), ErrorKind::kSchemaMismatch,
              "metaimage: big-endian payloads are not supported");
    }
  }
  std::array<double, 3> offset{0.0, 0.0, 0.0};
  for (const char* key : {"Offset", "Origin", "Position"}) {
    if (auto it = header.find(key); it != header.end()) {
      offset = parse_triple<double>(it->second, key);
      break;
    }
  }

  const std::filesystem::path raw_path = header_path.parent_path() / data_file;
  std::ifstream raw(raw_path, std::ios::binary);
  require(static_cast<bool>(raw), ErrorKind::kMissingInput,
          "metaimage: cannot open payload " + raw_path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(raw)), std::istreambuf_iterator<char>());
  const std::size_t count = dims[0] * dims[1] * dims[2];
  const std::size_t expected = count * element_size(type);
  require(bytes.size() == expected, ErrorKind::kSchemaMismatch,
          fmt::format("metaimage: payload has {} bytes, DimSize {}x{}x{} needs {}", bytes.size(),
                      dims[0], dims[1], dims[2], expected));

  Volume volume;
  // Header triples are (x, y, z); storage is (z, y, x).
  volume.voxels = Grid3<float>({dims[2], dims[1], dims[0]});
  volume.spacing = {spacing[2], spacing[1], spacing[0]};
  volume.origin = {offset[2], offset[1], offset[0]};
  volume.series_id = header_path.stem().string();
  validate_geometry(volume);
  switch (type) {
    case MetaElementType::kUInt8: decode<std::uint8_t>(bytes, volume.voxels.values()); break;
    case MetaElementType::kInt16: decode<std::int16_t>(bytes, volume.voxels.values()); break;
    case MetaElementType::kFloat32: decode<float>(bytes, volume.voxels.values()); break;
    case MetaElementType::kFloat64: decode<double>(bytes, volume.voxels.values()); break;
  }
  return volume;
}

void write_metaimage(const Volume& volume, const std::filesystem::path& header_path,
                     MetaElementType type) {
  require(!volume.voxels.empty(), ErrorKind::kInvalidArgument,
          "metaimage: refusing to write an empty volume");
  validate_geometry(volume);
  std::filesystem::path raw_path = header_path;
  raw_path.replace_extension(".raw");
  if (header_path.has_parent_path()) std::filesystem::create_directories(header_path.parent_path());

  const auto& e = volume.voxels.extents();
  const auto& s = volume.spacing;
  const auto& o = volume.origin;
  std::ofstream header(header_path);
  require(static_cast<bool>(header), ErrorKind::kIo,
          "metaimage: cannot write " + header_path.string());
  header << "ObjectType = Image\n"
         << "NDims = 3\n"
         << "BinaryData = True\n"
         << "BinaryDataByteOrderMSB = False\n"
         << "CompressedData = False\n"
         << "TransformMatrix = 1 0 0 0 1 0 0 0 1\n"
         << fmt::format("Offset = {} {} {}\n", o[2], o[1], o[0])
         << "CenterOfRotation = 0 0 0\n"
         << "AnatomicalOrientation = RAI\n"
         << fmt::format("ElementSpacing = {} {} {}\n", s[2], s[1], s[0])
         << fmt::format("DimSize = {} {} {}\n", e[2], e[1], e[0])
         << "ElementType = " << element_name(type) << '\n'
         << "ElementDataFile = " << raw_path.filename().string() << '\n';
  require(static_cast<bool>(header), ErrorKind::kIo,
          "metaimage: write failed for " + header_path.string());

  std::vector<char> bytes(volume.voxels.size() * element_size(type));
  const auto values = volume.voxels.values();
  switch (type) {
    case MetaElementType::kUInt8: encode<std::uint8_t>(values, bytes); break;
    case MetaElementType::kInt16: encode<std::int16_t>(values, bytes); break;
    case MetaElementType::kFloat32: encode<float>(values, bytes); break;
    case MetaElementType::kFloat64: encode<double>(values, bytes); break;
  }
  std::ofstream raw(raw_path, std::ios::binary);
  raw.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(raw), ErrorKind::kIo, "metaimage: write failed for " + raw_path.string());
}

}  // namespace noduleforge
