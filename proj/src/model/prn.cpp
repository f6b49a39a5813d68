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

#include "noduleforge/model/prn.hpp"

#include "noduleforge/core/error.hpp"

namespace noduleforge {

template <typename T>
int build_ddb(ModelGraph<T>& g, const std::string& prefix, int in, std::size_t growth) {
  require(growth > 0, ErrorKind::kInvalidArgument, "ddb: growth must be positive");
  std::vector<int> features{in};
  int current = in;
  for (std::size_t l = 0; l < kDdbKernels.size(); ++l) {
    const std::string name = prefix + ".l" + std::to_string(l + 1);
    const int conv = g.conv(name, current, ConvSpec::same(kDdbKernels[l], kDdbDilation, growth));
    features.push_back(g.relu(name + ".relu", conv));
    current = g.concat(name + ".cat", features);
  }
  return current;
}

template <typename T>
int build_transition_down(ModelGraph<T>& g, const std::string& prefix, int in,
                          std::size_t out_channels) {
  const FeatureShape& s = g.shape(in);
  for (std::size_t a = 0; a < 3; ++a) {
    require(s.spatial[a] % 2 == 0, ErrorKind::kShapeMismatch,
            "transition_down '" + prefix + "': odd extent " + std::to_string(s.spatial[a]) +
                " along axis " + std::to_string(a));
  }
  const int bn = g.batchnorm(prefix + ".bn", in);
  const int conv = g.conv(prefix + ".conv", bn, ConvSpec::same(3, 1, out_channels));
  const int act = g.relu(prefix + ".relu", conv);
  return g.maxpool(prefix + ".pool", act);
}

void PrnConfig::validate() const {
  for (auto v : growth) require(v > 0, ErrorKind::kInvalidArgument, "prn: growth must be positive");
  require(patch >= 16 && patch % 16 == 0, ErrorKind::kInvalidArgument,
          "prn: patch edge must be a positive multiple of 16");
}

template <typename T>
ModelGraph<T> build_prn(const PrnConfig& config) {
  config.validate();
  ModelGraph<T> g;
  const int x = g.input("input", {1, {config.patch, config.patch, config.patch}});
  const int big = g.enlarge("enlarge", x);

  struct Path {
    std::array<int, 4> ddb;
    int bottom;
  };
  auto encoder = [&](const std::string& p, int in) {
    Path path{};
    int h = g.relu(p + ".stem.relu", g.conv(p + ".stem", in, ConvSpec::same(3, 1, config.growth[0])));
    for (std::size_t b = 0; b < 4; ++b) {
      const std::string block = p + ".b" + std::to_string(b + 1);
      path.ddb[b] = build_ddb(g, block + ".ddb", h, config.growth[b]);
      h = build_transition_down(g, block + ".td", path.ddb[b], config.growth[b]);
    }
    path.bottom = h;
    return path;
  };
  const Path o = encoder("orig", x);
  const Path e = encoder("enl", big);

  int h = g.concat("dec.bottom", {o.bottom, g.maxpool("dec.bottom.pool", e.bottom)});
  for (int b = 3; b >= 0; --b) {
    const std::string up = "dec.up" + std::to_string(b + 1);
    const int t = g.conv_transpose(up + ".tconv", h, ConvSpec::upsample2x(3, config.growth[b]));
    const int skip = g.maxpool(up + ".skip.pool", e.ddb[b]);
    const int cat = g.concat(up + ".cat", {t, o.ddb[b], skip});
    h = build_ddb(g, up + ".ddb", cat, config.growth[b]);
  }
  const int head = g.conv("head", h, ConvSpec::same(3, 1, 1));
  g.mark_output(g.sigmoid("head.sigmoid", head));
  return g;
}

std::size_t prn_parameter_count(const PrnConfig& config) {
  auto conv = [](std::size_t cin, std::size_t cout, std::size_t k) {
    return cout * cin * k * k * k + cout;
  };
  auto ddb = [&](std::size_t c, std::size_t gr) {
    std::size_t n = 0;
    for (std::size_t l = 0; l < 3; ++l) n += conv(c + l * gr, gr, kDdbKernels[l]);
    return n;
  };
  const auto& gr = config.growth;
  std::size_t path = conv(1, gr[0], 3);
  std::size_t c = gr[0];
  std::array<std::size_t, 4> ddb_out{};
  for (std::size_t b = 0; b < 4; ++b) {
    path += ddb(c, gr[b]);
    ddb_out[b] = c + 3 * gr[b];
    path += 2 * ddb_out[b] + conv(ddb_out[b], gr[b], 3);
    c = gr[b];
  }
  std::size_t total = 2 * path;
  c = 2 * gr[3];
  for (int b = 3; b >= 0; --b) {
    total += c * gr[b] * 27 + gr[b];
    const std::size_t cat = gr[b] + 2 * ddb_out[b];
    total += ddb(cat, gr[b]);
    c = cat + 3 * gr[b];
  }
  return total + conv(c, 1, 3);
}

template int build_ddb(ModelGraph<float>&, const std::string&, int, std::size_t);
template int build_ddb(ModelGraph<double>&, const std::string&, int, std::size_t);
template int build_transition_down(ModelGraph<float>&, const std::string&, int, std::size_t);
template int build_transition_down(ModelGraph<double>&, const std::string&, int, std::size_t);
template ModelGraph<float> build_prn(const PrnConfig&);
template ModelGraph<double> build_prn(const PrnConfig&);

}  // namespace noduleforge
