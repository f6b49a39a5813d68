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

#include <cmath>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "noduleforge/core/checkpoint.hpp"
#include "noduleforge/core/conv.hpp"
#include "noduleforge/core/error.hpp"
#include "noduleforge/core/ops.hpp"
#include "noduleforge/core/optim.hpp"
#include "noduleforge/core/parallel.hpp"
#include "noduleforge/kernels/kernels.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace noduleforge;
using testing::gradcheck;
using testing::project;
using testing::random_array;

namespace {

const Array<double>* no_bias = nullptr;

double max_diff(const Array<double>& a, const Array<double>& b) {
  REQUIRE(a.shape() == b.shape());
  return testing::max_abs_diff(a.values(), b.values());
}

double dot(const Array<double>& a, const Array<double>& b) {
  return std::inner_product(a.values().begin(), a.values().end(), b.values().begin(), 0.0);
}

}  // namespace

TEST_CASE("conv3d of a zero input is zero") {
  Rng rng(0);
  Array<double> x(Shape{1, 3, 3, 3}, 0.0);
  auto w = random_array<double>({1, 1, 3, 3, 3}, rng);
  auto y = conv3d_forward(x, w, no_bias, ConvSpec::same(3, 1, 1));
  for (double v : y.values()) CHECK(v == 0.0);
}

TEST_CASE("conv3d with a centered unit kernel is the identity") {
  Rng rng(1);
  auto x = random_array<double>({1, 5, 5, 5}, rng);
  Array<double> w(Shape{1, 1, 3, 3, 3}, 0.0);
  w[13] = 1.0;
  auto y = conv3d_forward(x, w, no_bias, ConvSpec::same(3, 1, 1));
  CHECK(y == x);
}

TEST_CASE("dilated conv3d matches direct summation") {
  Rng rng(2);
  auto x = random_array<double>({2, 8, 8, 8}, rng);
  auto w = random_array<double>({4, 2, 3, 3, 3}, rng);
  auto b = random_array<double>({4}, rng);
  ConvSpec spec = ConvSpec::same(3, 2, 4);
  CHECK(spec.padding[0] == 2);
  auto y = conv3d_forward(x, w, &b, spec);
  CHECK(y.shape() == Shape{4, 8, 8, 8});
  CHECK(max_diff(y, testing::direct_conv3d(x, w, &b, spec)) <= 1e-10);
}

TEST_CASE("conv3d matches direct summation on random geometries") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t ci = 0, n = 0;
    ConvSpec spec = testing::random_conv_spec(rng, ci, n);
    const std::size_t k = spec.kernel[0];
    auto x = random_array<double>({ci, n, n + 1, n + 2}, rng);
    auto w = random_array<double>({spec.out_channels, ci, k, k, k}, rng);
    auto b = random_array<double>({spec.out_channels}, rng);
    auto y = conv3d_forward(x, w, &b, spec);
    CHECK(max_diff(y, testing::direct_conv3d(x, w, &b, spec)) <= 1e-10);
  }
}

TEST_CASE("same padding preserves extents") {
  for (std::size_t k : {3u, 5u})
    for (std::size_t d : {1u, 2u}) {
      ConvSpec spec = ConvSpec::same(k, d, 2);
      CHECK(spec.effective_extent(0) == (k - 1) * d + 1);
      for (std::size_t n : {7u, 8u, 16u}) CHECK(spec.output_extent(n, 1) == n);
    }
}

TEST_CASE("conv3d rejects mismatched shapes naming the axis") {
  Rng rng(4);
  auto x = random_array<double>({2, 4, 4, 4}, rng);
  auto w = random_array<double>({1, 3, 3, 3, 3}, rng);
  try {
    conv3d_forward(x, w, no_bias, ConvSpec::same(3, 1, 1));
    FAIL("expected a shape mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kShapeMismatch);
    CHECK(std::string(e.what()).find("channel") != std::string::npos);
  }
  ConvSpec big;
  big.kernel = {5, 3, 3};
  auto w2 = random_array<double>({1, 2, 5, 3, 3}, rng);
  auto tiny = random_array<double>({2, 3, 4, 4}, rng);
  try {
    conv3d_forward(tiny, w2, no_bias, big);
    FAIL("expected a shape mismatch");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("depth") != std::string::npos);
  }
}

TEST_CASE("conv3d backward with zero upstream is zero") {
  Rng rng(5);
  auto x = random_array<double>({2, 4, 4, 4}, rng);
  auto w = random_array<double>({3, 2, 3, 3, 3}, rng);
  ConvSpec spec = ConvSpec::same(3, 1, 3);
  Array<double> up(Shape{3, 4, 4, 4}, 0.0);
  auto g = conv3d_backward(up, x, w, spec);
  for (auto* a : {&g.input, &g.weights, &g.bias})
    for (double v : a->values()) CHECK(v == 0.0);
}

TEST_CASE("single output voxel weight gradient is the input patch") {
  Rng rng(6);
  auto x = random_array<double>({1, 3, 3, 3}, rng);
  auto w = random_array<double>({1, 1, 3, 3, 3}, rng);
  ConvSpec spec;
  auto y = conv3d_forward(x, w, no_bias, spec);
  REQUIRE(y.shape() == Shape{1, 1, 1, 1});
  Array<double> up(Shape{1, 1, 1, 1}, 1.0);
  auto g = conv3d_backward(up, x, w, spec);
  CHECK(max_diff(Array<double>(Shape{27}, std::vector<double>(g.weights.values().begin(), g.weights.values().end())),
                 Array<double>(Shape{27}, std::vector<double>(x.values().begin(), x.values().end()))) == 0.0);
  CHECK(g.bias[0] == 1.0);
}

TEST_CASE("conv3d backward rejects a missing forward input") {
  Rng rng(7);
  auto w = random_array<double>({1, 1, 3, 3, 3}, rng);
  Array<double> up(Shape{1, 4, 4, 4}, 1.0);
  CHECK_THROWS_AS(conv3d_backward(up, Array<double>(), w, ConvSpec::same(3, 1, 1)), Error);
}

TEST_CASE("conv3d gradients match finite differences") {
  Rng rng(8);
  ConvSpec spec = ConvSpec::same(3, 1, 2);
  Tensor<double> x(random_array<double>({2, 6, 6, 6}, rng));
  Tensor<double> w(random_array<double>({2, 2, 3, 3, 3}, rng));
  Tensor<double> b(random_array<double>({2}, rng));
  auto r = random_array<double>({2, 6, 6, 6}, rng);
  std::vector<Tensor<double>> leaves{x, w, b};
  CHECK(gradcheck(leaves, [&] { return project(ops::conv3d(x, w, &b, spec), r); }) < 1e-4);
}

TEST_CASE("dilated and strided conv3d gradients match finite differences") {
  Rng rng(9);
  ConvSpec spec = ConvSpec::same(5, 2, 2);
  spec.stride = 2;
  Tensor<double> x(random_array<double>({2, 2, 7, 7, 6}, rng));
  Tensor<double> w(random_array<double>({2, 2, 5, 5, 5}, rng));
  auto y0 = ops::conv3d<double>(x, w, nullptr, spec);
  auto r = random_array<double>(y0.shape(), rng);
  std::vector<Tensor<double>> leaves{x, w};
  CHECK(gradcheck(leaves, [&] { return project(ops::conv3d<double>(x, w, nullptr, spec), r); }) < 1e-4);
}

TEST_CASE("transposed convolution impulse stamps the kernel") {
  Rng rng(10);
  ConvSpec spec = ConvSpec::upsample2x(3, 1);
  auto w = random_array<double>({1, 1, 3, 3, 3}, rng);
  Array<double> x(Shape{1, 2, 2, 2}, 0.0);
  x[7] = 1.0;  // (1, 1, 1)
  auto y = conv_transpose3d_forward(x, w, no_bias, spec);
  REQUIRE(y.shape() == Shape{1, 4, 4, 4});
  // Input j lands at output 2j - p + a for tap a, with p = 1.
  for (std::size_t z = 0; z < 4; ++z)
    for (std::size_t yy = 0; yy < 4; ++yy)
      for (std::size_t xx = 0; xx < 4; ++xx) {
        const double expected = (z >= 1 && yy >= 1 && xx >= 1)
                                    ? w[((z - 1) * 3 + (yy - 1)) * 3 + (xx - 1)]
                                    : 0.0;
        CHECK(y[(z * 4 + yy) * 4 + xx] == expected);
      }
}

TEST_CASE("transposed convolution of zero is zero") {
  Rng rng(11);
  auto w = random_array<double>({2, 3, 3, 3, 3}, rng);
  Array<double> x(Shape{2, 3, 3, 3}, 0.0);
  auto y = conv_transpose3d_forward(x, w, no_bias, ConvSpec::upsample2x(3, 3));
  CHECK(y.shape() == Shape{3, 6, 6, 6});
  for (double v : y.values()) CHECK(v == 0.0);
}

TEST_CASE("transposed convolution rejects unsupported strides") {
  Rng rng(12);
  auto w = random_array<double>({1, 1, 3, 3, 3}, rng);
  Array<double> x(Shape{1, 2, 2, 2}, 1.0);
  ConvSpec spec = ConvSpec::upsample2x(3, 1);
  spec.stride = 0;
  CHECK_THROWS_AS(conv_transpose3d_forward(x, w, no_bias, spec), Error);
}

TEST_CASE("transposed convolution is the adjoint of conv3d") {
  Rng rng(13);
  ConvSpec spec = ConvSpec::upsample2x(3, 3);
  // Adjoint pairs: conv3d maps [3, 8^3] -> [2, 4^3] with weights [2, 3, k^3];
  // the transposed layer maps [2, 4^3] -> [3, 8^3] with the same buffer.
  ConvSpec fwd = spec;
  fwd.out_channels = 2;
  auto w = random_array<double>({2, 3, 3, 3, 3}, rng);
  auto x = random_array<double>({3, 8, 8, 8}, rng);
  auto y = random_array<double>({2, 4, 4, 4}, rng);
  const double lhs = dot(conv3d_forward(x, w, no_bias, fwd), y);
  const double rhs = dot(x, conv_transpose3d_forward(y, w, no_bias, spec));
  CHECK(std::abs(lhs - rhs) <= 1e-8);
}

TEST_CASE("transposed convolution gradients match finite differences") {
  Rng rng(14);
  ConvSpec spec = ConvSpec::upsample2x(3, 2);
  Tensor<double> x(random_array<double>({2, 3, 3, 3}, rng));
  Tensor<double> w(random_array<double>({2, 2, 3, 3, 3}, rng));
  Tensor<double> b(random_array<double>({2}, rng));
  auto r = random_array<double>({2, 6, 6, 6}, rng);
  std::vector<Tensor<double>> leaves{x, w, b};
  CHECK(gradcheck(leaves, [&] { return project(ops::conv_transpose3d(x, w, &b, spec), r); }) < 1e-4);
}

TEST_CASE("maxpool examples") {
  Tensor<double> c(Array<double>(Shape{2, 4, 4, 4}, 3.0));
  auto pc = ops::maxpool3d(c).output;
  CHECK(pc.shape() == Shape{2, 2, 2, 2});
  for (double v : pc.values()) CHECK(v == 3.0);

  Tensor<double> e(Shape{1, 2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  auto pe = ops::maxpool3d(e);
  CHECK(pe.output.item() == 8.0);
  CHECK(pe.argmax[0] == 7);

  Rng rng(15);
  auto x = random_array<double>({1, 4, 4, 4}, rng);
  auto p = ops::maxpool3d(Tensor<double>(x)).output;
  for (std::size_t z = 0; z < 2; ++z)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t w = 0; w < 2; ++w) {
        double m = -1e300;
        for (std::size_t a = 0; a < 8; ++a)
          m = std::max(m, x[((2 * z + a / 4) * 4 + 2 * y + (a / 2) % 2) * 4 + 2 * w + a % 2]);
        CHECK(p.values()[(z * 2 + y) * 2 + w] == m);
      }
}

TEST_CASE("maxpool of odd extents rounds up") {
  Tensor<double> x(Shape{1, 3, 1, 1}, {1, -2, -5});
  auto p = ops::maxpool3d(x).output;
  CHECK(p.shape() == Shape{1, 2, 1, 1});
  CHECK(p.values()[0] == 1);
  CHECK(p.values()[1] == -5);
}

TEST_CASE("maxpool backward routes gradient to the argmax") {
  Rng rng(16);
  Tensor<double> x(random_array<double>({2, 4, 4, 6}, rng), true);
  auto pool = ops::maxpool3d(x);
  auto r = random_array<double>(pool.output.shape(), rng);
  backward(project(pool.output, r));
  double routed = 0;
  std::vector<bool> is_max(x.size(), false);
  for (auto i : pool.argmax) is_max[i] = true;
  for (std::size_t i = 0; i < x.size(); ++i) {
    routed += x.grad()[i];
    if (!is_max[i]) CHECK(x.grad()[i] == 0.0);
  }
  CHECK(routed == doctest::Approx(std::accumulate(r.values().begin(), r.values().end(), 0.0)).epsilon(1e-12));
  std::vector<Tensor<double>> leaves{x};
  CHECK(gradcheck(leaves, [&] { return project(ops::maxpool3d(x).output, r); }) < 1e-4);
}

TEST_CASE("batchnorm of a standardized input is nearly the identity") {
  Rng rng(17);
  auto raw = random_array<double>({2, 4, 4, 4}, rng);
  Array<double> x = raw;
  for (std::size_t c = 0; c < 2; ++c) {
    double m = 0, v = 0;
    for (std::size_t i = 0; i < 64; ++i) m += raw[c * 64 + i] / 64;
    for (std::size_t i = 0; i < 64; ++i) v += (raw[c * 64 + i] - m) * (raw[c * 64 + i] - m) / 64;
    for (std::size_t i = 0; i < 64; ++i) x[c * 64 + i] = (raw[c * 64 + i] - m) / std::sqrt(v);
  }
  Tensor<double> gamma(Array<double>(Shape{2}, 1.0)), beta(Array<double>(Shape{2}, 0.0));
  Tensor<double> rm(Array<double>(Shape{2}, 0.0)), rv(Array<double>(Shape{2}, 1.0));
  auto y = ops::batchnorm3d(Tensor<double>(x), gamma, beta, rm, rv, Mode::kTrain);
  CHECK(max_diff(y.array(), x) < 1e-4);
}

TEST_CASE("batchnorm of a constant input yields beta") {
  Tensor<double> x(Array<double>(Shape{1, 3, 3, 3}, 7.0));
  Tensor<double> gamma(Array<double>(Shape{1}, 1.0)), beta(Array<double>(Shape{1}, 5.0));
  Tensor<double> rm(Array<double>(Shape{1}, 0.0)), rv(Array<double>(Shape{1}, 1.0));
  auto y = ops::batchnorm3d(x, gamma, beta, rm, rv, Mode::kTrain);
  for (double v : y.values()) CHECK(v == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("batchnorm output moments and running statistics") {
  Rng rng(18);
  auto x = random_array<double>({4, 3, 5, 5, 5}, rng, -3.0, 7.0);
  Tensor<double> gamma(Array<double>(Shape{3}, 1.0)), beta(Array<double>(Shape{3}, 0.0));
  Tensor<double> rm(Array<double>(Shape{3}, 0.0)), rv(Array<double>(Shape{3}, 1.0));
  auto y = ops::batchnorm3d(Tensor<double>(x), gamma, beta, rm, rv, Mode::kTrain);
  const std::size_t per = 125;
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0, v = 0, xm = 0, xv = 0;
    const double count = 4.0 * per;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < per; ++i) {
        m += y.values()[(n * 3 + c) * per + i] / count;
        xm += x[(n * 3 + c) * per + i] / count;
      }
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < per; ++i) {
        const double d = y.values()[(n * 3 + c) * per + i] - m;
        const double dx = x[(n * 3 + c) * per + i] - xm;
        v += d * d / count;
        xv += dx * dx / (count - 1);
      }
    CHECK(std::abs(m) < 1e-6);
    CHECK(std::abs(v - 1) < 1e-4);
    CHECK(rm.values()[c] == doctest::Approx(0.1 * xm).epsilon(1e-10));
    CHECK(rv.values()[c] == doctest::Approx(0.9 + 0.1 * xv).epsilon(1e-10));
  }
  auto inf = ops::batchnorm3d(Tensor<double>(x), gamma, beta, rm, rv, Mode::kInference);
  const double expected = (x[0] - rm.values()[0]) / std::sqrt(rv.values()[0] + kBatchNormEpsilon);
  CHECK(inf.values()[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("batchnorm gradients match finite differences") {
  Rng rng(19);
  Tensor<double> x(random_array<double>({2, 2, 3, 3, 3}, rng));
  Tensor<double> gamma(random_array<double>({2}, rng, 0.5, 1.5)), beta(random_array<double>({2}, rng));
  auto r = random_array<double>({2, 2, 3, 3, 3}, rng);
  std::vector<Tensor<double>> leaves{x, gamma, beta};
  CHECK(gradcheck(leaves, [&] {
          Tensor<double> rm(Array<double>(Shape{2}, 0.0)), rv(Array<double>(Shape{2}, 1.0));
          return project(ops::batchnorm3d(x, gamma, beta, rm, rv, Mode::kTrain), r);
        }) < 1e-4);
  Tensor<double> rm(random_array<double>({2}, rng)), rv(random_array<double>({2}, rng, 0.5, 2.0));
  CHECK(gradcheck(leaves, [&] { return project(ops::batchnorm3d(x, gamma, beta, rm, rv, Mode::kInference), r); }) <
        1e-4);
}

TEST_CASE("activation examples") {
  Tensor<double> x(Shape{2}, {-1.0, 2.0});
  auto r = ops::relu(x);
  CHECK(r.values()[0] == 0.0);
  CHECK(r.values()[1] == 2.0);
  CHECK(ops::sigmoid(Tensor<double>::scalar(0.0)).item() == 0.5);
  Tensor<double> extreme(Shape{2}, {-1000.0, 1000.0});
  for (double v : ops::sigmoid(extreme).values()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  Rng rng(20);
  Tensor<double> z(random_array<double>({5}, rng));
  CHECK(ops::linear(z).array() == z.array());
}

TEST_CASE("activation gradients match finite differences") {
  Rng rng(21);
  auto a = random_array<double>({3, 4, 4, 4}, rng);
  for (auto& v : a.values())
    if (std::abs(v) < 0.05) v = 0.3;  // keep away from the relu kink
  Tensor<double> x(a);
  auto r = random_array<double>(a.shape(), rng);
  std::vector<Tensor<double>> leaves{x};
  CHECK(gradcheck(leaves, [&] { return project(ops::relu(x), r); }) < 1e-4);
  CHECK(gradcheck(leaves, [&] { return project(ops::sigmoid(x), r); }) < 1e-4);
}

TEST_CASE("dropout examples") {
  Rng rng(22);
  Tensor<double> x(random_array<double>({1, 4, 4, 4}, rng));
  CHECK(ops::dropout(x, 0.0, Mode::kTrain, rng).array() == x.array());
  CHECK(ops::dropout(x, 0.5, Mode::kInference, rng).array() == x.array());

  Tensor<double> ones(Array<double>(Shape{100000}, 1.0));
  auto d = ops::dropout(ones, 0.5, Mode::kTrain, rng);
  std::size_t survivors = 0;
  double sum = 0;
  for (double v : d.values()) {
    if (v != 0.0) {
      ++survivors;
      CHECK(v == 2.0);
    }
    sum += v;
  }
  const double fraction = survivors / 1e5;
  CHECK(fraction >= 0.49);
  CHECK(fraction <= 0.51);
  CHECK(std::abs(sum / 1e5 - 1.0) < 0.02);
}

TEST_CASE("dropout gradients match finite differences") {
  Rng rng(23);
  Tensor<double> x(random_array<double>({2, 3, 3, 3}, rng));
  auto r = random_array<double>(x.shape(), rng);
  std::vector<Tensor<double>> leaves{x};
  CHECK(gradcheck(leaves, [&] {
          Rng mask(99);
          return project(ops::dropout(x, 0.5, Mode::kTrain, mask), r);
        }) < 1e-4);
}

TEST_CASE("concat and split") {
  Rng rng(24);
  Tensor<double> a(random_array<double>({2, 3, 3, 3}, rng));
  std::vector<Tensor<double>> one{a};
  CHECK(ops::concat_channels<double>(one).array() == a.array());

  std::vector<Tensor<double>> many;
  for (int i = 0; i < 4; ++i) many.emplace_back(random_array<double>({32, 2, 2, 2}, rng));
  auto cat = ops::concat_channels<double>(many);
  CHECK(cat.shape() == Shape{128, 2, 2, 2});
  std::vector<std::size_t> sizes{32, 32, 32, 32};
  auto parts = ops::split_channels(cat, sizes);
  for (int i = 0; i < 4; ++i) CHECK(parts[i].array() == many[i].array());

  std::vector<Tensor<double>> batched{Tensor<double>(random_array<double>({2, 1, 2, 2, 2}, rng)),
                                      Tensor<double>(random_array<double>({2, 3, 2, 2, 2}, rng))};
  CHECK(ops::concat_channels<double>(batched).shape() == Shape{2, 4, 2, 2, 2});

  std::vector<Tensor<double>> bad{a, Tensor<double>(random_array<double>({2, 3, 3, 4}, rng))};
  CHECK_THROWS_AS(ops::concat_channels<double>(bad), Error);
}

TEST_CASE("concat gradients match finite differences") {
  Rng rng(25);
  Tensor<double> a(random_array<double>({2, 1, 2, 3, 3}, rng)), b(random_array<double>({2, 2, 2, 3, 3}, rng));
  auto r = random_array<double>({2, 3, 2, 3, 3}, rng);
  std::vector<Tensor<double>> leaves{a, b};
  CHECK(gradcheck(leaves, [&] {
          std::vector<Tensor<double>> in{a, b};
          return project(ops::concat_channels<double>(in), r);
        }) < 1e-4);
  std::vector<std::size_t> sizes{1, 2};
  auto r0 = random_array<double>({2, 1, 2, 3, 3}, rng);
  auto r1 = random_array<double>({2, 2, 2, 3, 3}, rng);
  Tensor<double> whole(random_array<double>({2, 3, 2, 3, 3}, rng));
  std::vector<Tensor<double>> one{whole};
  CHECK(gradcheck(one, [&] {
          auto parts = ops::split_channels(whole, sizes);
          return ops::add(project(parts[0], r0), project(parts[1], r1));
        }) < 1e-4);
}

TEST_CASE("enlarge examples") {
  Tensor<double> c(Array<double>(Shape{1, 3, 3, 3}, 2.5));
  auto ec = ops::enlarge2x(c);
  CHECK(ec.shape() == Shape{1, 6, 6, 6});
  for (double v : ec.values()) CHECK(v == 2.5);

  // Ramp along width: value 3 * x. Output o samples o / 2 away from the clamp.
  Array<double> ramp(Shape{1, 2, 2, 4});
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 3.0 * static_cast<double>(i % 4);
  auto er = ops::enlarge2x(Tensor<double>(ramp));
  for (std::size_t i = 0; i < er.size(); ++i) {
    const std::size_t o = i % 8;
    const double expected = 3.0 * std::min(o / 2.0, 3.0);
    CHECK(std::abs(er.values()[i] - expected) <= 1e-6);
  }

  Rng rng(26);
  auto x = random_array<double>({2, 3, 4, 5}, rng);
  auto big = enlarge_patch(x);
  for (std::size_t c2 = 0; c2 < 2; ++c2)
    for (std::size_t z = 0; z < 3; ++z)
      for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t w = 0; w < 5; ++w)
          CHECK(std::abs(big[((c2 * 6 + 2 * z) * 8 + 2 * y) * 10 + 2 * w] - x[((c2 * 3 + z) * 4 + y) * 5 + w]) <=
                1e-6);
}

TEST_CASE("enlarge gradients match finite differences") {
  Rng rng(27);
  Tensor<double> x(random_array<double>({2, 3, 2, 3}, rng));
  auto r = random_array<double>({2, 6, 4, 6}, rng);
  std::vector<Tensor<double>> leaves{x};
  CHECK(gradcheck(leaves, [&] { return project(ops::enlarge2x(x), r); }) < 1e-4);
}

TEST_CASE("loss examples") {
  Array<double> one(Shape{1}, 1.0);
  CHECK(ops::bce(Tensor<double>(Shape{1}, {0.5}), one).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  Rng rng(28);
  auto x = random_array<double>({10}, rng);
  CHECK(ops::mae(Tensor<double>(x), x).item() == 0.0);
  Tensor<double> extremes(Shape{2}, {0.0, 1.0});
  Array<double> wrong(Shape{2}, std::vector<double>{1.0, 0.0});
  CHECK(std::isfinite(ops::bce(extremes, wrong).item()));
}

TEST_CASE("loss gradients match finite differences") {
  Rng rng(29);
  Tensor<double> p(random_array<double>({12}, rng, 0.2, 0.8));
  auto t = random_array<double>({12}, rng, 0.0, 1.0);
  auto w = random_array<double>({12}, rng, 0.0, 1.0);
  auto y = random_array<double>({12}, rng, -1.0, 1.0);
  Tensor<double> q(random_array<double>({12}, rng, -1.0, 1.0));
  for (std::size_t i = 0; i < 12; ++i)
    if (std::abs(q.values()[i] - y[i]) < 0.05) y[i] += 0.2;  // away from the mae kink
  std::vector<Tensor<double>> lp{p}, lq{q};
  CHECK(gradcheck(lp, [&] { return ops::bce(p, t); }) < 1e-4);
  CHECK(gradcheck(lq, [&] { return ops::mae(q, y); }) < 1e-4);
  CHECK(gradcheck(lq, [&] { return ops::weighted_mae(q, y, w); }) < 1e-4);
  CHECK(gradcheck(lq, [&] { return ops::mean(ops::scale(ops::add(q, q), 3.0)); }) < 1e-4);
}

TEST_CASE("sgd momentum examples") {
  Array<double> theta(Shape{2}, std::vector<double>{1.0, -2.0});
  Array<double> v(Shape{2}, 0.0);
  Array<double> zero(Shape{2}, 0.0);
  sgd_momentum_step(theta, zero, v, 0.1, 0.9);
  CHECK(theta == Array<double>(Shape{2}, std::vector<double>{1.0, -2.0}));

  Array<double> g(Shape{2}, std::vector<double>{0.5, 4.0});
  sgd_momentum_step(theta, g, v, 0.1, 0.9);
  CHECK(theta[0] == doctest::Approx(1.0 - 0.05).epsilon(1e-15));
  CHECK(theta[1] == doctest::Approx(-2.0 - 0.4).epsilon(1e-15));

  // f(theta) = theta^2 / 2 from theta = 1 with lr 0.1:
  // v1 = -0.1, theta1 = 0.9; v2 = -0.09 - 0.09 = -0.18, theta2 = 0.72.
  Array<double> t(Shape{1}, 1.0), vel(Shape{1}, 0.0);
  for (int step = 0; step < 2; ++step) sgd_momentum_step(t, t, vel, 0.1, 0.9);
  CHECK(t[0] == doctest::Approx(0.72).epsilon(1e-12));
}

TEST_CASE("sgd optimizer clears gradients and skips untouched parameters") {
  Tensor<double> a(Array<double>(Shape{1}, 1.0), true), b(Array<double>(Shape{1}, 3.0), true);
  backward(ops::scale(a, 2.0));
  std::vector<Tensor<double>> params{a, b};
  SgdMomentum<double> opt(0.9);
  opt.step(params, 0.5);
  CHECK(a.item() == 0.0);
  CHECK(b.item() == 3.0);
  CHECK(a.grad()[0] == 0.0);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  Rng rng(30);
  std::vector<CheckpointRecord> records;
  records.push_back({"conv.weight", random_array<float>({2, 1, 3, 3, 3}, rng)});
  records.push_back({"bn.running_var", random_array<float>({2}, rng)});
  records.push_back({"empty", Array<float>(Shape{0})});
  const auto path = std::filesystem::temp_directory_path() / "nf_checkpoint_roundtrip.ndf";
  write_checkpoint(path, records);
  auto back = read_checkpoint(path);
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].name == records[i].name);
    CHECK(back[i].values == records[i].values);
  }
  {
    std::ofstream bad(path, std::ios::binary);
    bad << "NOPE";
  }
  CHECK_THROWS_AS(read_checkpoint(path), Error);
  std::filesystem::remove(path);
}

TEST_CASE("scalar and AVX2 kernels agree") {
  if (!kernels::backend_available(kernels::Backend::kAvx2)) return;
  Rng rng(31);
  const auto saved = kernels::active_backend();
  for (int trial = 0; trial < 10; ++trial) {
    std::size_t ci = 0, n = 0;
    ConvSpec spec = testing::random_conv_spec(rng, ci, n);
    const std::size_t k = spec.kernel[0];
    auto x = random_array<double>({ci, n, n, n + 1}, rng);
    auto w = random_array<double>({spec.out_channels, ci, k, k, k}, rng);
    kernels::set_backend(kernels::Backend::kScalar);
    auto ys = conv3d_forward(x, w, no_bias, spec);
    auto gs = conv3d_backward(ys, x, w, spec);
    auto xf = random_array<float>({ci, n, n, n + 1}, rng);
    auto wf = random_array<float>({spec.out_channels, ci, k, k, k}, rng);
    auto yfs = conv3d_forward(xf, wf, static_cast<const Array<float>*>(nullptr), spec);
    kernels::set_backend(kernels::Backend::kAvx2);
    auto ya = conv3d_forward(x, w, no_bias, spec);
    auto ga = conv3d_backward(ys, x, w, spec);
    auto yfa = conv3d_forward(xf, wf, static_cast<const Array<float>*>(nullptr), spec);
    CHECK(max_diff(ys, ya) <= 1e-12);
    CHECK(max_diff(gs.input, ga.input) <= 1e-11);
    CHECK(max_diff(gs.weights, ga.weights) <= 1e-10);
    for (std::size_t i = 0; i < yfs.size(); ++i) CHECK(std::abs(yfs[i] - yfa[i]) <= 1e-4f);
  }
  kernels::set_backend(saved);
}

TEST_CASE("no-grad guard stops graph recording") {
  Tensor<double> a(Array<double>(Shape{1}, 2.0), true);
  {
    NoGradGuard guard;
    CHECK_FALSE(grad_enabled());
    CHECK_FALSE(ops::scale(a, 3.0).requires_grad());
  }
  CHECK(grad_enabled());
  CHECK(ops::scale(a, 3.0).requires_grad());
}

TEST_CASE("parallel_for visits every item and rethrows") {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 5) fail(ErrorKind::kInvalidArgument, "boom");
                               }),
                  Error);
}

TEST_CASE("derived seeds are deterministic and distinct") {
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
  Rng a(5), b(5);
  for (int i = 0; i < 10; ++i) CHECK(a.uniform() == b.uniform());
}
