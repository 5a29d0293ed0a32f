#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "corefqa/common.hpp"

namespace corefqa {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << " x ";
    os << s[i];
  }
  os << "]";
  return os.str();
}

namespace detail {

struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily, same length as value
  bool requires_grad = false;
};

}  // namespace detail

/// Dense row-major float64 tensor. Value-semantic handle: copies share the
/// underlying buffer, which is what lets one parameter appear in many ops.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return full(std::move(shape), 0.0, requires_grad);
  }

  static Tensor ones(Shape shape, bool requires_grad = false) {
    return full(std::move(shape), 1.0, requires_grad);
  }

  static Tensor full(Shape shape, double v, bool requires_grad = false) {
    Tensor t;
    t.node_ = std::make_shared<detail::TensorNode>();
    t.node_->shape = std::move(shape);
    t.node_->value.assign(shape_numel(t.node_->shape), v);
    t.node_->requires_grad = requires_grad;
    return t;
  }

  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false) {
    if (shape_numel(shape) != data.size()) {
      throw ShapeError("Tensor::from: shape " + shape_str(shape) + " needs " +
                       std::to_string(shape_numel(shape)) + " values, got " +
                       std::to_string(data.size()));
    }
    Tensor t;
    t.node_ = std::make_shared<detail::TensorNode>();
    t.node_->shape = std::move(shape);
    t.node_->value = std::move(data);
    t.node_->requires_grad = requires_grad;
    return t;
  }

  static Tensor scalar(double v, bool requires_grad = false) {
    return from({1}, {v}, requires_grad);
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rank() const { return node_->shape.size(); }

  // Rank-2 helpers; rank-1 tensors count as a single row.
  std::size_t rows() const { return rank() == 2 ? node_->shape[0] : 1; }
  std::size_t cols() const { return rank() == 2 ? node_->shape[1] : node_->shape[0]; }

  std::vector<double>& data() { return node_->value; }
  const std::vector<double>& data() const { return node_->value; }

  double operator()(std::size_t i, std::size_t j) const { return node_->value[i * cols() + j]; }
  double& operator()(std::size_t i, std::size_t j) { return node_->value[i * cols() + j]; }
  double operator[](std::size_t i) const { return node_->value[i]; }
  double& operator[](std::size_t i) { return node_->value[i]; }

  double item() const {
    if (size() != 1) {
      throw ShapeError("Tensor::item: tensor " + shape_str(shape()) + " is not a scalar");
    }
    return node_->value[0];
  }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool rg) { node_->requires_grad = rg; }

  /// Gradient buffer, allocated (zero) on first access.
  std::vector<double>& grad() {
    if (node_->grad.size() != node_->value.size()) node_->grad.assign(node_->value.size(), 0.0);
    return node_->grad;
  }
  const std::vector<double>& grad() const { return const_cast<Tensor*>(this)->grad(); }

  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

/// Ordered record of executed ops, replayed in reverse to propagate adjoints.
/// One tape per forward pass; construction activates it for the current
/// thread, destruction deactivates. Tapes nest like a stack.
class Tape {
 public:
  Tape() {
    parent_ = active_;
    active_ = this;
  }
  ~Tape() { active_ = parent_; }

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active() { return active_; }

  void record(std::function<void()> backward_step) { steps_.push_back(std::move(backward_step)); }

  std::size_t op_count() const { return steps_.size(); }

  /// Seeds d(root)/d(root) = 1 and replays every recorded op once, in
  /// reverse execution order (a valid topological order by construction).
  void backward(Tensor root) {
    if (!root.defined() || root.size() != 1) {
      throw ShapeError("Tape::backward: root must be a scalar tensor");
    }
    root.grad()[0] += 1.0;
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
  }

 private:
  std::vector<std::function<void()>> steps_;
  Tape* parent_ = nullptr;
  static thread_local Tape* active_;
};

inline thread_local Tape* Tape::active_ = nullptr;

namespace detail {

inline bool grads_wanted(std::initializer_list<const Tensor*> inputs) {
  if (Tape::active() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

}  // namespace detail

/// Free function mirroring Tape::backward for the active computation.
inline void backward(Tape& tape, const Tensor& root) { tape.backward(root); }

}  // namespace corefqa
