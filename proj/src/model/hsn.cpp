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

#include "noduleforge/model/hsn.hpp"

#include <cmath>

#include "noduleforge/core/error.hpp"
#include "noduleforge/model/prn.hpp"

namespace noduleforge {

void HsnConfig::validate() const {
  for (auto v : growth) require(v > 0, ErrorKind::kInvalidArgument, "hsn: growth must be positive");
  require(patch >= 1, ErrorKind::kInvalidArgument, "hsn: patch edge must be positive");
  require(dropout >= 0.0 && dropout < 1.0, ErrorKind::kInvalidArgument,
          "hsn: dropout must be in [0, 1)");
}

namespace {

template <typename T>
int transition(ModelGraph<T>& g, const std::string& prefix, int in, std::size_t out_channels,
               double dropout) {
  const int bn = g.batchnorm(prefix + ".bn", in);
  const int conv = g.conv(prefix + ".conv", bn, ConvSpec::same(3, 1, out_channels));
  const int pool = g.maxpool(prefix + ".pool", g.relu(prefix + ".relu", conv));
  return g.dropout(prefix + ".drop", pool, dropout);
}

}  // namespace

template <typename T>
ModelGraph<T> build_hsn(const HsnConfig& config) {
  config.validate();
  ModelGraph<T> g;
  const std::array<std::size_t, 3> p{config.patch, config.patch, config.patch};
  std::array<int, 3> streams{};
  for (std::size_t s = 0; s < 3; ++s) {
    streams[s] = g.input("input" + std::to_string(kConcentricSizes[s]), {1, p});
  }
  std::vector<int> parts;
  for (std::size_t s = 0; s < 3; ++s) {
    parts.push_back(transition(g, "b1.td" + std::to_string(kConcentricSizes[s]), streams[s],
                               config.growth[0], config.dropout));
  }
  int h = build_ddb(g, "b1.ddb", g.concat("b1.cat", parts), config.growth[0]);
  for (std::size_t b = 1; b < 4; ++b) {
    const std::string block = "b" + std::to_string(b + 1);
    h = transition(g, block + ".td", h, config.growth[b], config.dropout);
    h = build_ddb(g, block + ".ddb", h, config.growth[b]);
  }
  const int tail = g.relu("tail.relu", g.conv("tail.conv", h, ConvSpec::same(3, 1, config.growth[3])));
  h = g.dropout("tail.drop", g.maxpool("tail.pool", tail), config.dropout);
  const int cls = g.conv("head.cls", h, ConvSpec::same(1, 1, 1));
  const int diam = g.conv("head.diameter", h, ConvSpec::same(1, 1, 1));
  g.mark_output(g.sigmoid("head.cls.sigmoid", cls));
  g.mark_output(diam);
  return g;
}

std::size_t hsn_parameter_count(const HsnConfig& config) {
  auto conv = [](std::size_t cin, std::size_t cout, std::size_t k) {
    return cout * cin * k * k * k + cout;
  };
  auto ddb = [&](std::size_t c, std::size_t gr) {
    std::size_t n = 0;
    for (std::size_t l = 0; l < 3; ++l) n += conv(c + l * gr, gr, kDdbKernels[l]);
    return n;
  };
  const auto& gr = config.growth;
  std::size_t total = 3 * (2 + conv(1, gr[0], 3));
  std::size_t c = 3 * gr[0];
  total += ddb(c, gr[0]);
  c += 3 * gr[0];
  for (std::size_t b = 1; b < 4; ++b) {
    total += 2 * c + conv(c, gr[b], 3);
    c = gr[b];
    total += ddb(c, gr[b]);
    c += 3 * gr[b];
  }
  total += conv(c, gr[3], 3);
  return total + 2 * conv(gr[3], 1, 1);
}

template <typename T>
Tensor<T> hsn_loss(const Tensor<T>& probability, const Tensor<T>& diameter,
                   std::span<const T> labels, std::span<const T> diameters_mm) {
  const std::size_t n = labels.size();
  require(probability.size() == n && diameter.size() == n && diameters_mm.size() == n,
          ErrorKind::kShapeMismatch, "hsn_loss: batch sizes differ");
  for (std::size_t i = 0; i < n; ++i) {
    require(labels[i] == T{0} || labels[i] == T{1}, ErrorKind::kInvalidArgument,
            "hsn_loss: labels must be 0 or 1");
    require(labels[i] == T{0} || (std::isfinite(diameters_mm[i]) && diameters_mm[i] > T{0}),
            ErrorKind::kInvalidArgument, "hsn_loss: positive sample without a diameter");
  }
  Array<T> target(probability.shape(), std::vector<T>(labels.begin(), labels.end()));
  std::vector<T> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = labels[i] == T{0} ? T{0} : diameters_mm[i];
  Array<T> d_target(diameter.shape(), std::move(d));
  Array<T> weights(diameter.shape(), std::vector<T>(labels.begin(), labels.end()));
  return ops::add(ops::bce(probability, target), ops::weighted_mae(diameter, d_target, weights));
}

ConcentricPatches crop_concentric(const Volume& volume, const WorldPoint& center, float outside) {
  const auto& grid = volume.voxels;
  const VoxelPoint v = world_to_voxel(volume, center);
  const std::array<double, 3> c{v.z, v.y, v.x};
  std::array<long, 3> ci{};
  for (std::size_t a = 0; a < 3; ++a) {
    ci[a] = std::lround(c[a]);
    require(c[a] > -0.5 && c[a] < static_cast<double>(grid.extents()[a]) - 0.5,
            ErrorKind::kInvalidArgument, "crop_concentric: center lies outside the volume");
  }
  const std::size_t edge = kConcentricSizes[0];
  ConcentricPatches out;
  for (std::size_t s = 0; s < 3; ++s) {
    const long size = static_cast<long>(kConcentricSizes[s]);
    const long pad = (static_cast<long>(edge) - size) / 2;
    Array<float> patch({1, edge, edge, edge}, 0.0f);
    for (long z = 0; z < size; ++z) {
      for (long y = 0; y < size; ++y) {
        for (long x = 0; x < size; ++x) {
          const long gz = ci[0] - size / 2 + z;
          const long gy = ci[1] - size / 2 + y;
          const long gx = ci[2] - size / 2 + x;
          const float value = grid.contains(gz, gy, gx) ? grid(gz, gy, gx) : outside;
          patch[((z + pad) * edge + (y + pad)) * edge + (x + pad)] = value;
        }
      }
    }
    out.patches[s] = std::move(patch);
  }
  return out;
}

template ModelGraph<float> build_hsn(const HsnConfig&);
template ModelGraph<double> build_hsn(const HsnConfig&);
template Tensor<float> hsn_loss(const Tensor<float>&, const Tensor<float>&, std::span<const float>,
                                std::span<const float>);
template Tensor<double> hsn_loss(const Tensor<double>&, const Tensor<double>&,
                                 std::span<const double>, std::span<const double>);

}  // namespace noduleforge
