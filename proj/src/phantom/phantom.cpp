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

#include "noduleforge/phantom/phantom.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "noduleforge/core/error.hpp"
#include "noduleforge/core/parallel.hpp"
#include "noduleforge/core/rng.hpp"
#include "noduleforge/io/metaimage.hpp"

namespace noduleforge {
namespace {

constexpr int kPlacementRetries = 2000;

using Vec = std::array<double, 3>;

double norm(const Vec& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

// Voxel index range [lo, hi] along an axis covering [c - r, c + r] mm.
std::pair<long, long> covered(double c, double r, double spacing, std::size_t extent) {
  const long lo = std::max<long>(0, static_cast<long>(std::floor((c - r) / spacing)));
  const long hi = std::min<long>(static_cast<long>(extent) - 1,
                                 static_cast<long>(std::ceil((c + r) / spacing)));
  return {lo, hi};
}

template <typename F>
void for_ball(const PhantomSpec& spec, const Vec& center, double radius, F&& f) {
  const auto [z0, z1] = covered(center[0], radius, spec.spacing[0], spec.extents[0]);
  const auto [y0, y1] = covered(center[1], radius, spec.spacing[1], spec.extents[1]);
  const auto [x0, x1] = covered(center[2], radius, spec.spacing[2], spec.extents[2]);
  for (long z = z0; z <= z1; ++z) {
    for (long y = y0; y <= y1; ++y) {
      for (long x = x0; x <= x1; ++x) {
        const Vec p{z * spec.spacing[0], y * spec.spacing[1], x * spec.spacing[2]};
        const double d = norm({p[0] - center[0], p[1] - center[1], p[2] - center[2]});
        if (d <= radius) f(static_cast<std::size_t>(z), static_cast<std::size_t>(y),
                           static_cast<std::size_t>(x), d);
      }
    }
  }
}

Vec random_direction(Rng& rng) {
  while (true) {
    Vec v{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double n = norm(v);
    if (n > 0.1 && n <= 1.0) return {v[0] / n, v[1] / n, v[2] / n};
  }
}

}  // namespace

void PhantomSpec::validate() const {
  for (int a = 0; a < 3; ++a) {
    require(extents[a] >= 16, ErrorKind::kInvalidArgument, "phantom: extents must be >= 16");
    require(spacing[a] > 0.0, ErrorKind::kInvalidArgument, "phantom: spacing must be positive");
  }
  require(min_nodules <= max_nodules, ErrorKind::kInvalidArgument,
          "phantom: min_nodules exceeds max_nodules");
  require(min_diameter_mm >= 3.0 && max_diameter_mm <= 30.0 && min_diameter_mm <= max_diameter_mm,
          ErrorKind::kInvalidArgument, "phantom: diameters must lie within [3, 30] mm");
  require(noise_sigma_hu >= 0.0 && edge_mm > 0.0, ErrorKind::kInvalidArgument,
          "phantom: noise and edge width must be non-negative");
}

double Ellipsoid::level(const Vec& p) const {
  double s = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double u = (p[a] - center_mm[a]) / semi_axes_mm[a];
    s += u * u;
  }
  return std::sqrt(s);
}

Phantom generate_phantom(const PhantomSpec& spec, const std::string& series_id) {
  spec.validate();
  Rng rng(spec.seed);
  const Vec size{spec.extents[0] * spec.spacing[0], spec.extents[1] * spec.spacing[1],
                 spec.extents[2] * spec.spacing[2]};

  Phantom phantom;
  Volume& volume = phantom.volume;
  volume.voxels = Grid3<float>(spec.extents, kAirHu);
  volume.spacing = spec.spacing;
  volume.origin = {-size[0] / 2, -size[1] / 2, -size[2] / 2};
  volume.series_id = series_id;
  auto& grid = volume.voxels;

  // Body cylinder along z, lungs left and right of the midline.
  const double body_radius = 0.45 * std::min(size[1], size[2]);
  const double cy = size[1] / 2;
  const double cx = size[2] / 2;
  phantom.lungs[0] = {{size[0] / 2, cy, cx - 0.22 * size[2]},
                      {0.38 * size[0], 0.30 * size[1], 0.18 * size[2]}};
  phantom.lungs[1] = {{size[0] / 2, cy, cx + 0.22 * size[2]},
                      {0.38 * size[0], 0.30 * size[1], 0.18 * size[2]}};
  auto in_lung = [&](const Vec& p, double margin = 0.0) {
    for (const auto& lung : phantom.lungs) {
      Ellipsoid shrunk = lung;
      for (auto& s : shrunk.semi_axes_mm) s -= margin;
      if (shrunk.semi_axes_mm[0] > 0 && shrunk.semi_axes_mm[1] > 0 &&
          shrunk.semi_axes_mm[2] > 0 && shrunk.level(p) < 1.0) {
        return true;
      }
    }
    return false;
  };
  for (std::size_t z = 0; z < grid.depth(); ++z) {
    for (std::size_t y = 0; y < grid.height(); ++y) {
      for (std::size_t x = 0; x < grid.width(); ++x) {
        const Vec p{z * spec.spacing[0], y * spec.spacing[1], x * spec.spacing[2]};
        const double dy = p[1] - cy;
        const double dx = p[2] - cx;
        if (dy * dy + dx * dx <= body_radius * body_radius) grid(z, y, x) = kBodyHu;
        if (in_lung(p)) grid(z, y, x) = kLungHu;
      }
    }
  }

  // Vessels: random-walk tubes that stay inside the lungs.
  for (std::size_t v = 0; v < spec.n_vessels; ++v) {
    const auto& lung = phantom.lungs[rng.below(2)];
    Vec p;
    do {
      for (int a = 0; a < 3; ++a) {
        p[a] = lung.center_mm[a] + rng.uniform(-1, 1) * lung.semi_axes_mm[a];
      }
    } while (lung.level(p) >= 0.8);
    Vec dir = random_direction(rng);
    const double radius = rng.uniform(0.8, 1.5);
    const std::size_t steps = 20 + rng.below(41);
    for (std::size_t s = 0; s < steps && lung.level(p) < 1.0; ++s) {
      for_ball(spec, p, radius, [&](std::size_t z, std::size_t y, std::size_t x, double) {
        if (grid(z, y, x) == kLungHu) grid(z, y, x) = kVesselHu;
      });
      const Vec jitter = random_direction(rng);
      for (int a = 0; a < 3; ++a) dir[a] += 0.3 * jitter[a];
      const double n = norm(dir);
      for (int a = 0; a < 3; ++a) {
        dir[a] /= n;
        p[a] += dir[a];
      }
    }
  }

  // Nodules: soft-edged spheres fully inside a lung, pairwise apart.
  const std::size_t count = spec.min_nodules + rng.below(spec.max_nodules - spec.min_nodules + 1);
  std::vector<std::pair<Vec, double>> placed;
  for (std::size_t n = 0; n < count; ++n) {
    const double diameter = rng.uniform(spec.min_diameter_mm, spec.max_diameter_mm);
    const double radius = diameter / 2;
    bool ok = false;
    Vec c{};
    for (int attempt = 0; attempt < kPlacementRetries && !ok; ++attempt) {
      const auto& lung = phantom.lungs[rng.below(2)];
      for (int a = 0; a < 3; ++a) {
        c[a] = lung.center_mm[a] + rng.uniform(-1, 1) * lung.semi_axes_mm[a];
      }
      ok = in_lung(c, radius + 1.0);
      for (const auto& [other, other_d] : placed) {
        const double d = norm({c[0] - other[0], c[1] - other[1], c[2] - other[2]});
        ok = ok && d >= 2.0 * std::max(diameter, other_d);
      }
    }
    require(ok, ErrorKind::kPlacement,
            fmt::format("phantom {}: cannot place nodule {} of {}", series_id, n + 1, count));
    placed.emplace_back(c, diameter);
    for_ball(spec, c, radius + 4 * spec.edge_mm,
             [&](std::size_t z, std::size_t y, std::size_t x, double d) {
               const double s = 1.0 / (1.0 + std::exp((d - radius) / spec.edge_mm));
               float& v = grid(z, y, x);
               v = static_cast<float>(v + s * (kNoduleHu - v));
             });
    const WorldPoint world = voxel_to_world(
        volume, {c[0] / spec.spacing[0], c[1] / spec.spacing[1], c[2] / spec.spacing[2]});
    phantom.annotations.push_back({series_id, world, diameter});
  }

  if (spec.noise_sigma_hu > 0.0) {
    for (auto& v : grid.values()) v += static_cast<float>(rng.normal(0.0, spec.noise_sigma_hu));
  }
  return phantom;
}

std::vector<SuiteEntry> generate_suite(std::size_t n_volumes, const PhantomSpec& spec,
                                       std::uint64_t seed, const std::filesystem::path& out_dir,
                                       std::size_t workers) {
  std::filesystem::create_directories(out_dir);
  std::vector<SuiteEntry> entries(n_volumes);
  std::vector<std::vector<Annotation>> annotations(n_volumes);
  parallel_for(n_volumes, workers, [&](std::size_t i) {
    PhantomSpec s = spec;
    s.seed = derive_seed(seed, i);
    const std::string id = fmt::format("phantom_{:04d}", i);
    Phantom p = generate_phantom(s, id);
    const auto path = out_dir / (id + ".mhd");
    write_metaimage(p.volume, path, MetaElementType::kInt16);
    entries[i] = {id, path, s.seed, p.annotations.size()};
    annotations[i] = std::move(p.annotations);
  });
  std::vector<Annotation> all;
  for (auto& a : annotations) all.insert(all.end(), a.begin(), a.end());
  write_annotations(all, out_dir / "annotations.csv");

  std::ofstream manifest(out_dir / "manifest.csv");
  manifest << kManifestHeader << '\n';
  for (const auto& e : entries) {
    manifest << fmt::format("{},{},{},{}\n", e.series_id, e.path.filename().string(), e.seed, e.n_nodules);
  }
  require(static_cast<bool>(manifest), ErrorKind::kIo, "phantom: cannot write manifest");
  return entries;
}

std::vector<SuiteEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kMissingInput, "cannot open manifest " + path.string());
  std::string line;
  std::getline(in, line);
  require(line.rfind(kManifestHeader, 0) == 0, ErrorKind::kSchemaMismatch,
          path.string() + ": unexpected manifest header");
  std::vector<SuiteEntry> entries;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::istringstream row(line);
    SuiteEntry e;
    std::string path_field, seed_field, count_field;
    if (!std::getline(row, e.series_id, ',') || !std::getline(row, path_field, ',') ||
        !std::getline(row, seed_field, ',') || !std::getline(row, count_field)) {
      fail(ErrorKind::kSchemaMismatch, fmt::format("{}:{}: malformed row", path.string(), number));
    }
    e.path = path.parent_path() / path_field;
    e.seed = std::stoull(seed_field);
    e.n_nodules = std::stoull(count_field);
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace noduleforge
