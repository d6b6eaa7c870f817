#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "duriano/nn/tensor.hpp"

namespace duriano::nn {

// One recorded operation. Inputs are always created before their consumers,
// so descending `order` is a reverse topological order of the tape.
struct Node {
  Tensor value;
  Tensor grad;  // empty until a gradient arrives
  bool requires_grad = false;
  std::uint64_t order = 0;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  Tensor& grad_buffer();
};

// Shared handle to a node. Copies alias the same value and gradient.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  const Tensor& value() const { return node_->value; }
  Tensor& value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() != 0; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  bool defined() const { return static_cast<bool>(node_); }
  void zero_grad();

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Creates the output node of an operation. `backward` is only attached when
// gradients are being recorded and some input requires them.
Var record(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward);

// Seeds d(root)/d(root) = 1 and accumulates gradients into every reachable
// node that requires them. Gradients add onto any existing values.
void backward(const Var& root);

bool grad_enabled();

// Disables graph construction on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace duriano::nn
