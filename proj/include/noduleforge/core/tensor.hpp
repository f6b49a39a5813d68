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

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace noduleforge {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major N-d buffer with value semantics.
template <typename T>
class Array {
 public:
  Array() = default;
  explicit Array(Shape shape, T fill = T{});
  Array(Shape shape, std::vector<T> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }
  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  void fill(T value);
  /// Reinterprets the buffer under a new shape with the same element count.
  void reshape(Shape shape);

  bool operator==(const Array& other) const = default;

 private:
  Shape shape_;
  std::vector<T> values_;
};

template <typename T>
class Tensor;

namespace detail {

template <typename T>
struct Node {
  Array<T> value;
  Array<T> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads `grad` of this node and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  Array<T>& grad_buffer();
};

}  // namespace detail

/// Handle to a node of the reverse-mode graph. Copies share the node.
///
/// Values produced by ops are never mutated afterwards; only leaf tensors
/// (parameters, buffers) are updated in place by optimizers.
template <typename T>
class Tensor {
 public:
  Tensor();
  explicit Tensor(Array<T> value, bool requires_grad = false);
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  const Shape& shape() const { return node_->value.shape(); }
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const { return node_->value.size(); }
  const Array<T>& array() const { return node_->value; }
  std::span<const T> values() const { return node_->value.values(); }
  /// In-place access; only meaningful for leaves (parameters, buffers).
  Array<T>& mutable_array() { return node_->value; }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }
  bool has_grad() const { return !node_->grad.empty(); }
  const Array<T>& grad() const { return node_->grad; }
  Array<T>& mutable_grad() { return node_->grad_buffer(); }
  void zero_grad();

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  /// Creates an op output node. `backward` is recorded only when some
  /// parent requires a gradient.
  static Tensor from_op(Array<T> value, std::vector<Tensor> parents,
                        std::function<void(detail::Node<T>&)> backward);

  std::shared_ptr<detail::Node<T>> node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node<T>> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node<T>> node_;
};

/// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Reverse-mode sweep from a scalar root; leaves accumulate into grad().
template <typename T>
void backward(const Tensor<T>& root);

/// Raises when a buffer holds NaN or Inf. Compiled to a no-op with NDEBUG.
template <typename T>
void debug_check_finite(const Array<T>& values, const char* op);

}  // namespace noduleforge
