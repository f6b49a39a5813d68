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

#include "noduleforge/core/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include "noduleforge/core/error.hpp"

namespace noduleforge {

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

template <typename T>
Array<T>::Array(Shape shape, T fill)
    : shape_(std::move(shape)), values_(element_count(shape_), fill) {}

template <typename T>
Array<T>::Array(Shape shape, std::vector<T> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  require(values_.size() == element_count(shape_), ErrorKind::kShapeMismatch,
          "array: " + std::to_string(values_.size()) + " values for shape " +
              shape_string(shape_));
}

template <typename T>
void Array<T>::fill(T value) {
  std::fill(values_.begin(), values_.end(), value);
}

template <typename T>
void Array<T>::reshape(Shape shape) {
  require(element_count(shape) == values_.size(), ErrorKind::kShapeMismatch,
          "reshape: " + shape_string(shape_) + " -> " + shape_string(shape));
  shape_ = std::move(shape);
}

namespace detail {

template <typename T>
Array<T>& Node<T>::grad_buffer() {
  if (grad.empty()) grad = Array<T>(value.shape(), T{0});
  return grad;
}

}  // namespace detail

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

template <typename T>
Tensor<T>::Tensor() : node_(std::make_shared<detail::Node<T>>()) {}

template <typename T>
Tensor<T>::Tensor(Array<T> value, bool requires_grad) : Tensor() {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad)
    : Tensor(Array<T>(std::move(shape), std::move(values)), requires_grad) {}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return Tensor(Array<T>(std::move(shape), T{0}), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Array<T>(Shape{}, std::vector<T>{value}), requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  require(size() == 1, ErrorKind::kShapeMismatch,
          "item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (!node_->grad.empty()) node_->grad.fill(T{0});
}

template <typename T>
Tensor<T> Tensor<T>::from_op(Array<T> value, std::vector<Tensor> parents,
                             std::function<void(detail::Node<T>&)> backward) {
  auto node = std::make_shared<detail::Node<T>>();
  node->value = std::move(value);
  bool any = false;
  if (g_grad_enabled)
    for (const auto& p : parents) any = any || p.requires_grad();
  if (any) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (const auto& p : parents) node->parents.push_back(p.node_);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

template <typename T>
void backward(const Tensor<T>& root) {
  require(root.size() == 1, ErrorKind::kShapeMismatch,
          "backward: root must be scalar, got " + shape_string(root.shape()));
  if (!root.requires_grad()) return;

  using NodePtr = detail::Node<T>*;
  std::vector<NodePtr> order;
  std::unordered_set<NodePtr> seen;
  // Iterative post-order DFS.
  std::vector<std::pair<NodePtr, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      NodePtr parent = node->parents[next++].get();
      if (parent->requires_grad && !seen.count(parent)) {
        seen.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad_buffer()[0] += T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodePtr node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
  // Release intermediate gradients; leaves keep theirs.
  for (NodePtr node : order) {
    if (node->backward) node->grad = Array<T>();
  }
}

template <typename T>
void debug_check_finite(const Array<T>& values, const char* op) {
#ifndef NDEBUG
  for (T v : values.values()) {
    if (!std::isfinite(v)) fail(ErrorKind::kDiverged, std::string(op) + ": non-finite output");
  }
#else
  (void)values;
  (void)op;
#endif
}

template class Array<float>;
template class Array<double>;
template class Array<std::uint8_t>;
template class Tensor<float>;
template class Tensor<double>;
template void backward(const Tensor<float>&);
template void backward(const Tensor<double>&);
template void debug_check_finite(const Array<float>&, const char*);
template void debug_check_finite(const Array<double>&, const char*);

}  // namespace noduleforge
