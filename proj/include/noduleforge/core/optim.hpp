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

#pragma once

#include <span>
#include <vector>

#include "noduleforge/core/tensor.hpp"

namespace noduleforge {

/// One momentum update on a single buffer:
///   v <- momentum * v - lr * g;  theta <- theta + v
template <typename T>
void sgd_momentum_step(Array<T>& param, const Array<T>& grad, Array<T>& velocity, T lr, T momentum);

/// Mini-batch SGD with classical momentum over a fixed parameter list.
template <typename T>
class SgdMomentum {
 public:
  explicit SgdMomentum(double momentum = 0.9) : momentum_(momentum) {}

  /// Applies one update using each parameter's accumulated gradient, then
  /// clears the gradients. Parameters without a gradient are left alone.
  void step(std::span<Tensor<T>> params, double lr);

  double momentum() const { return momentum_; }
  const std::vector<Array<T>>& velocities() const { return velocity_; }

 private:
  double momentum_;
  std::vector<Array<T>> velocity_;
};

}  // namespace noduleforge
