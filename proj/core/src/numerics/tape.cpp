#include "lencon/numerics/tape.hpp"

#include <stdexcept>
#include <utility>

namespace lencon {

const Tensor& Var::value() const { return tape_->value(*this); }

Var Tape::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::parameter(Parameter& param) {
  for (const auto& [p, id] : param_index_) {
    if (p == &param) return Var(this, id);
  }
  Node node;
  node.param = &param;
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_index_.emplace_back(&param, id);
  return Var(this, id);
}

Var Tape::reference(const Tensor& value) {
  Node node;
  node.external = &value;
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape_ != this) {
      throw std::invalid_argument("operation mixes variables from two tapes");
    }
    node.requires_grad = node.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

const Tensor& Tape::value(Var v) const {
  const Node& node = nodes_[v.id_];
  if (node.param) return node.param->value;
  if (node.external) return *node.external;
  return node.value;
}

Tensor& Tape::grad(Var v) {
  Node& node = nodes_[v.id_];
  if (node.param) {
    if (node.param->grad.dims() != node.param->value.dims()) {
      node.param->grad = Tensor(node.param->value.dims());
    }
    return node.param->grad;
  }
  if (grads_.size() < nodes_.size()) grads_.resize(nodes_.size());
  Tensor& g = grads_[v.id_];
  if (g.dims() != value(v).dims()) g = Tensor(value(v).dims());
  return g;
}

const Tensor* Tape::grad_if_any(Var v) const {
  const Node& node = nodes_[v.id_];
  if (node.param) return &node.param->grad;
  if (v.id_ >= grads_.size() || grads_[v.id_].dims() != value(v).dims()) {
    return nullptr;
  }
  return &grads_[v.id_];
}

void Tape::backward(Var root) {
  if (value(root).size() != 1) {
    throw ShapeError("backward() without a seed needs a scalar root, got " +
                     shape_string(value(root).dims()));
  }
  backward(root, Tensor(value(root).dims(), 1.0));
}

void Tape::backward(Var root, const Tensor& seed) {
  if (seed.dims() != value(root).dims()) {
    throw ShapeError("backward seed " + shape_string(seed.dims()) +
                     " does not match root " +
                     shape_string(value(root).dims()));
  }
  grads_.assign(nodes_.size(), Tensor());
  {
    Tensor& g = grad(root);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += seed[i];
  }
  // A node is reached once some consumer has allocated its gradient.
  for (std::uint32_t id = root.id_ + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.backward || grads_[id].empty()) continue;
    if (observer_) observer_(id);
    node.backward(*this, grads_[id], node.value);
  }
}

}  // namespace lencon
