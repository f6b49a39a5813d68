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

#include "noduleforge/core/optim.hpp"

#include "noduleforge/core/error.hpp"

namespace noduleforge {

template <typename T>
void sgd_momentum_step(Array<T>& param, const Array<T>& grad, Array<T>& velocity, T lr, T momentum) {
  require(param.shape() == grad.shape() && param.shape() == velocity.shape(), ErrorKind::kShapeMismatch,
          "sgd_momentum_step: parameter " + shape_string(param.shape()) + ", gradient " +
              shape_string(grad.shape()) + ", velocity " + shape_string(velocity.shape()));
  T* p = param.data();
  T* v = velocity.data();
  const T* g = grad.data();
  for (std::size_t i = 0; i < param.size(); ++i) {
    v[i] = momentum * v[i] - lr * g[i];
    p[i] += v[i];
  }
}

template <typename T>
void SgdMomentum<T>::step(std::span<Tensor<T>> params, double lr) {
  if (velocity_.empty()) {
    velocity_.reserve(params.size());
    for (const auto& p : params) velocity_.emplace_back(p.shape(), T{0});
  }
  require(velocity_.size() == params.size(), ErrorKind::kInvalidArgument,
          "SgdMomentum: parameter list changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) continue;
    sgd_momentum_step(params[i].mutable_array(), params[i].grad(), velocity_[i], static_cast<T>(lr),
                      static_cast<T>(momentum_));
    params[i].zero_grad();
  }
}

template void sgd_momentum_step(Array<float>&, const Array<float>&, Array<float>&, float, float);
template void sgd_momentum_step(Array<double>&, const Array<double>&, Array<double>&, double, double);
template class SgdMomentum<float>;
template class SgdMomentum<double>;

}  // namespace noduleforge
