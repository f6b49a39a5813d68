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

#include <atomic>
#include <cstdlib>
#include <string>

#include "noduleforge/core/error.hpp"
#include "noduleforge/kernels/cpu_features.hpp"
#include "noduleforge/kernels/kernels.hpp"

namespace noduleforge::kernels {
namespace {

Backend initial_backend() {
  if (const char* env = std::getenv("NODULEFORGE_SIMD")) {
    if (std::string(env) == "scalar") return Backend::kScalar;
  }
  return backend_available(Backend::kAvx2) ? Backend::kAvx2 : Backend::kScalar;
}

std::atomic<Backend>& backend_slot() {
  static std::atomic<Backend> slot{initial_backend()};
  return slot;
}

}  // namespace

std::string_view to_string(Backend backend) {
  return backend == Backend::kAvx2 ? "avx2" : "scalar";
}

bool backend_available(Backend backend) {
  if (backend == Backend::kScalar) return true;
#ifdef NODULEFORGE_HAVE_AVX2_KERNELS
  const auto& f = cpu_features();
  return f.avx2 && f.fma;
#else
  return false;
#endif
}

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  require(backend_available(backend), ErrorKind::kInvalidArgument,
          "kernel backend " + std::string(to_string(backend)) + " is not available on this CPU");
  backend_slot().store(backend, std::memory_order_relaxed);
}

#ifdef NODULEFORGE_HAVE_AVX2_KERNELS
#define NODULEFORGE_DISPATCH(fn, args)                      \
  do {                                                      \
    if (active_backend() == Backend::kAvx2) return avx2::fn(args); \
    return scalar::fn(args);                                \
  } while (0)
#else
#define NODULEFORGE_DISPATCH(fn, args) return scalar::fn(args)
#endif

void flat_forward(const FlatForwardArgs<float>& args) { NODULEFORGE_DISPATCH(flat_forward, args); }
void flat_forward(const FlatForwardArgs<double>& args) { NODULEFORGE_DISPATCH(flat_forward, args); }
void flat_weight_grad(const FlatWeightGradArgs<float>& args) { NODULEFORGE_DISPATCH(flat_weight_grad, args); }
void flat_weight_grad(const FlatWeightGradArgs<double>& args) { NODULEFORGE_DISPATCH(flat_weight_grad, args); }

#undef NODULEFORGE_DISPATCH

}  // namespace noduleforge::kernels
