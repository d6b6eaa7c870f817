#include "duriano/nn/autograd.hpp"

#include <algorithm>
#include <atomic>
#include <unordered_set>

#include "duriano/util/error.hpp"

namespace duriano::nn {

namespace {

std::atomic<std::uint64_t> next_order{1};
thread_local bool recording = true;

}  // namespace

Tensor& Node::grad_buffer() {
  if (grad.size() != value.size() || !grad.same_shape(value)) grad = Tensor(value.rows(), value.cols());
  return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
  node_->order = next_order.fetch_add(1, std::memory_order_relaxed);
}

void Var::zero_grad() {
  if (node_) node_->grad = Tensor();
}

bool grad_enabled() { return recording; }

NoGradGuard::NoGradGuard() : previous_(recording) { recording = false; }
NoGradGuard::~NoGradGuard() { recording = previous_; }

Var record(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward) {
  Var out(std::move(value));
  if (!recording) return out;
  const bool needs = std::any_of(inputs.begin(), inputs.end(), [](const Var& v) { return v.requires_grad(); });
  if (!needs) return out;
  auto& node = *out.node();
  node.requires_grad = true;
  node.inputs.reserve(inputs.size());
  for (auto& in : inputs) node.inputs.push_back(in.node());
  node.backward = std::move(backward);
  return out;
}

void backward(const Var& root) {
  if (!root.defined()) throw InputError("backward: undefined root");
  if (root.value().size() != 1) throw InputError("backward: root must be a scalar, got " + root.value().shape_string());
  if (!root.requires_grad()) return;

  std::vector<Node*> nodes;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root.node().get()};
  seen.insert(stack.back());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    nodes.push_back(n);
    for (const auto& in : n->inputs) {
      if (in->requires_grad && seen.insert(in.get()).second) stack.push_back(in.get());
    }
  }
  std::sort(nodes.begin(), nodes.end(), [](const Node* a, const Node* b) { return a->order > b->order; });

  root.node()->grad_buffer()[0] += 1.0;
  for (Node* n : nodes) {
    if (n->backward && n->grad.size() != 0) n->backward(*n);
  }
}

}  // namespace duriano::nn
