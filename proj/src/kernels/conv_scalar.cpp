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

#include <algorithm>

#include "noduleforge/kernels/kernels.hpp"

namespace noduleforge::kernels::scalar {
namespace {

constexpr std::size_t kBlock = 256;

template <typename T>
void forward_impl(const FlatForwardArgs<T>& a) {
  for (std::size_t i0 = 0; i0 < a.length; i0 += kBlock) {
    const std::size_t n = std::min(kBlock, a.length - i0);
    for (std::size_t co = 0; co < a.out_channels; ++co) {
      T* out = a.output + co * a.output_stride + i0;
      std::fill(out, out + n, T{0});
      for (std::size_t ci = 0; ci < a.in_channels; ++ci) {
        const T* x = a.input + ci * a.input_stride + i0;
        const T* w = a.weights + (co * a.in_channels + ci) * a.taps;
        for (std::size_t t = 0; t < a.taps; ++t) {
          const T wt = w[t];
          const T* p = x + a.tap_offsets[t];
          for (std::size_t i = 0; i < n; ++i) out[i] += wt * p[i];
        }
      }
    }
  }
}

template <typename T>
void weight_grad_impl(const FlatWeightGradArgs<T>& a) {
  for (std::size_t co = 0; co < a.out_channels; ++co) {
    const T* g = a.upstream + co * a.upstream_stride;
    for (std::size_t ci = 0; ci < a.in_channels; ++ci) {
      const T* x = a.input + ci * a.input_stride;
      T* gw = a.weight_grad + (co * a.in_channels + ci) * a.taps;
      for (std::size_t t = 0; t < a.taps; ++t) {
        const T* p = x + a.tap_offsets[t];
        T sum{0};
        for (std::size_t i = 0; i < a.length; ++i) sum += g[i] * p[i];
        gw[t] += sum;
      }
    }
  }
}

}  // namespace

void flat_forward(const FlatForwardArgs<float>& args) { forward_impl(args); }
void flat_forward(const FlatForwardArgs<double>& args) { forward_impl(args); }
void flat_weight_grad(const FlatWeightGradArgs<float>& args) { weight_grad_impl(args); }
void flat_weight_grad(const FlatWeightGradArgs<double>& args) { weight_grad_impl(args); }

}  // namespace noduleforge::kernels::scalar
