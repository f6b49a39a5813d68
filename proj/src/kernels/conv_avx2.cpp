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

// AVX2 + FMA variants of the flat convolution kernels.
//
// Compiled with -mavx2 -mfma. This translation unit must not instantiate
// std:: templates: an inline copy emitted here could be picked by the linker
// for the whole program and execute AVX2 code on CPUs without it.

#include <immintrin.h>

#include "noduleforge/kernels/kernels.hpp"

namespace noduleforge::kernels::avx2 {
namespace {

template <typename T>
struct Lanes;

template <>
struct Lanes<float> {
  using V = __m256;
  static constexpr std::size_t kWidth = 8;
  static V zero() { return _mm256_setzero_ps(); }
  static V load(const float* p) { return _mm256_loadu_ps(p); }
  static V broadcast(const float* p) { return _mm256_broadcast_ss(p); }
  static V fma(V a, V b, V c) { return _mm256_fmadd_ps(a, b, c); }
  static V mul(V a, V b) { return _mm256_mul_ps(a, b); }
  static V add(V a, V b) { return _mm256_add_ps(a, b); }
  static void store(float* p, V v) { _mm256_storeu_ps(p, v); }
  static float hsum(V v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
  }
};

template <>
struct Lanes<double> {
  using V = __m256d;
  static constexpr std::size_t kWidth = 4;
  static V zero() { return _mm256_setzero_pd(); }
  static V load(const double* p) { return _mm256_loadu_pd(p); }
  static V broadcast(const double* p) { return _mm256_broadcast_sd(p); }
  static V fma(V a, V b, V c) { return _mm256_fmadd_pd(a, b, c); }
  static V mul(V a, V b) { return _mm256_mul_pd(a, b); }
  static V add(V a, V b) { return _mm256_add_pd(a, b); }
  static void store(double* p, V v) { _mm256_storeu_pd(p, v); }
  static double hsum(V v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d high64 = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
  }
};

// Four vectors per chunk keep 2 x 4 accumulators plus operands within the
// sixteen ymm registers.
constexpr std::size_t kUnroll = 4;

template <typename T, std::size_t kCob>
void forward_block(const FlatForwardArgs<T>& a, std::size_t co0) {
  using L = Lanes<T>;
  using V = typename L::V;
  constexpr std::size_t kStep = L::kWidth * kUnroll;
  for (std::size_t i0 = 0; i0 < a.length; i0 += kStep) {
    V acc[kCob][kUnroll];
    for (std::size_t b = 0; b < kCob; ++b)
      for (std::size_t u = 0; u < kUnroll; ++u) acc[b][u] = L::zero();
    for (std::size_t ci = 0; ci < a.in_channels; ++ci) {
      const T* x = a.input + ci * a.input_stride + i0;
      const T* w[kCob];
      for (std::size_t b = 0; b < kCob; ++b) w[b] = a.weights + ((co0 + b) * a.in_channels + ci) * a.taps;
      for (std::size_t t = 0; t < a.taps; ++t) {
        const T* p = x + a.tap_offsets[t];
        V v[kUnroll];
        for (std::size_t u = 0; u < kUnroll; ++u) v[u] = L::load(p + u * L::kWidth);
        for (std::size_t b = 0; b < kCob; ++b) {
          const V wb = L::broadcast(w[b] + t);
          for (std::size_t u = 0; u < kUnroll; ++u) acc[b][u] = L::fma(v[u], wb, acc[b][u]);
        }
      }
    }
    for (std::size_t b = 0; b < kCob; ++b) {
      T* out = a.output + (co0 + b) * a.output_stride + i0;
      for (std::size_t u = 0; u < kUnroll; ++u) L::store(out + u * L::kWidth, acc[b][u]);
    }
  }
}

template <typename T>
void forward_impl(const FlatForwardArgs<T>& a) {
  std::size_t co = 0;
  for (; co + 2 <= a.out_channels; co += 2) forward_block<T, 2>(a, co);
  if (co < a.out_channels) forward_block<T, 1>(a, co);
}

template <typename T, std::size_t kCob>
void weight_grad_block(const FlatWeightGradArgs<T>& a, std::size_t co0) {
  using L = Lanes<T>;
  using V = typename L::V;
  constexpr std::size_t kStep = L::kWidth * kUnroll;
  const std::size_t per_co = a.in_channels * a.taps;
  T* scratch = a.scratch;
  for (std::size_t j = 0; j < kCob * per_co; ++j) L::store(scratch + j * L::kWidth, L::zero());

  for (std::size_t i0 = 0; i0 < a.length; i0 += kStep) {
    V g[kCob][kUnroll];
    for (std::size_t b = 0; b < kCob; ++b) {
      const T* up = a.upstream + (co0 + b) * a.upstream_stride + i0;
      for (std::size_t u = 0; u < kUnroll; ++u) g[b][u] = L::load(up + u * L::kWidth);
    }
    for (std::size_t ci = 0; ci < a.in_channels; ++ci) {
      const T* x = a.input + ci * a.input_stride + i0;
      for (std::size_t t = 0; t < a.taps; ++t) {
        const T* p = x + a.tap_offsets[t];
        V v[kUnroll];
        for (std::size_t u = 0; u < kUnroll; ++u) v[u] = L::load(p + u * L::kWidth);
        for (std::size_t b = 0; b < kCob; ++b) {
          T* slot = scratch + (b * per_co + ci * a.taps + t) * L::kWidth;
          V s01 = L::fma(g[b][1], v[1], L::mul(g[b][0], v[0]));
          V s23 = L::fma(g[b][3], v[3], L::mul(g[b][2], v[2]));
          L::store(slot, L::add(L::load(slot), L::add(s01, s23)));
        }
      }
    }
  }

  for (std::size_t b = 0; b < kCob; ++b) {
    T* gw = a.weight_grad + (co0 + b) * per_co;
    for (std::size_t j = 0; j < per_co; ++j) gw[j] += L::hsum(L::load(scratch + (b * per_co + j) * L::kWidth));
  }
}

template <typename T>
void weight_grad_impl(const FlatWeightGradArgs<T>& a) {
  std::size_t co = 0;
  for (; co + 2 <= a.out_channels; co += 2) weight_grad_block<T, 2>(a, co);
  if (co < a.out_channels) weight_grad_block<T, 1>(a, co);
}

}  // namespace

void flat_forward(const FlatForwardArgs<float>& args) { forward_impl(args); }
void flat_forward(const FlatForwardArgs<double>& args) { forward_impl(args); }
void flat_weight_grad(const FlatWeightGradArgs<float>& args) { weight_grad_impl(args); }
void flat_weight_grad(const FlatWeightGradArgs<double>& args) { weight_grad_impl(args); }

}  // namespace noduleforge::kernels::avx2
