#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hgl/parameter_store.hpp"
#include "hgl/tensor.hpp"

namespace hgl {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
/// lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Records primitive operations for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so creation order is already a
/// topological order and backward() simply walks it in reverse. A tape is
/// single-writer; build one per forward pass.
class Tape {
 public:
  using ForwardFn = std::function<Tensor(std::span<const Tensor* const>)>;
  /// Reads the output gradient of `node` and accumulates into its inputs.
  using BackwardFn = std::function<void(Tape&, std::uint32_t node)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);

  /// Leaf bound to a stored parameter. Repeated calls with the same name
  /// return the same node. The tape reads the store's tensor in place, so the
  /// store must outlive the tape.
  Var parameter(const ParameterStore& store, const std::string& name);

  /// Evaluates `forward` on the inputs and records the result.
  Var apply(const char* op, std::initializer_list<Var> inputs, ForwardFn forward, BackwardFn backward);

  const Tensor& value(std::uint32_t id) const;
  std::uint32_t input(std::uint32_t node, std::size_t k) const { return nodes_[node].inputs[k]; }
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }

  /// Output gradient of a node (zeros if nothing flowed into it).
  const Tensor& grad(std::uint32_t id);
  /// Mutable gradient accumulator of an input; allocated on first use.
  Tensor& grad_accumulator(std::uint32_t id);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must hold one element.
  void backward(Var loss);

  /// Overwrites the store's gradients with the tape's; parameters that never
  /// appeared on the tape get zero.
  void write_gradients(ParameterStore& store) const;
  /// Adds the tape's parameter gradients onto the store's accumulators.
  void accumulate_gradients(ParameterStore& store) const;

  /// Re-runs every recorded forward function against the current leaf values
  /// and returns the recomputed node values (leaves included).
  std::vector<Tensor> replay() const;

  /// Nodes whose backward rule ran during the last backward(), in visit order.
  const std::vector<std::uint32_t>& backward_order() const noexcept { return backward_order_; }

  std::size_t size() const noexcept { return nodes_.size(); }
  const char* op_name(std::uint32_t id) const { return nodes_[id].op; }

 private:
  struct Node {
    const char* op = "";
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::vector<std::uint32_t> inputs;
    ForwardFn forward;
    BackwardFn backward;
    std::string param;
  };

  std::vector<Node> nodes_;
  std::unordered_map<std::string, std::uint32_t> param_ids_;
  std::vector<std::uint32_t> backward_order_;
};

/// Computes d(loss)/d(param) for every parameter in `store`.
void backward(Tape& tape, Var loss, ParameterStore& store);

}  // namespace hgl
