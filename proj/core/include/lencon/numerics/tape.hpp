#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lencon/numerics/tensor.hpp"

namespace lencon {

class Tape;

// Handle to a value recorded on a tape. Cheap to copy; only valid while the
// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& dims() const { return value().dims(); }
  std::uint32_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

// Records primitive operations in execution order. backward() replays them in
// exact reverse order. Gradients of parameter leaves accumulate directly into
// Parameter::grad; everything else lives on the tape and dies with it.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad,
                                        const Tensor& out_value)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Registers a parameter leaf. Repeated calls for the same parameter return
  // the same node.
  Var parameter(Parameter& param);
  // Read-only view of an external tensor; never receives gradients. The
  // tensor must outlive the tape.
  Var reference(const Tensor& value);

  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id_].requires_grad; }

  // Gradient accumulator of v, allocated (zero) on first use. Only valid
  // during or after backward().
  Tensor& grad(Var v);
  const Tensor* grad_if_any(Var v) const;

  // Seeds d(root)/d(root) = 1 and propagates. root must hold one element.
  void backward(Var root);
  void backward(Var root, const Tensor& seed);

  // Visitor receives node ids as backward reaches them.
  void set_backward_observer(std::function<void(std::uint32_t)> observer) {
    observer_ = std::move(observer);
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Parameter* param = nullptr;
    const Tensor* external = nullptr;
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<std::pair<Parameter*, std::uint32_t>> param_index_;
  std::function<void(std::uint32_t)> observer_;
};

}  // namespace lencon
