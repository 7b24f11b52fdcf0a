#include "hgl/tape.hpp"

namespace hgl {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::parameter(const ParameterStore& store, const std::string& name) {
  if (auto it = param_ids_.find(name); it != param_ids_.end()) return Var(this, it->second);
  Node n;
  n.op = "parameter";
  n.external = &store.value(name);
  n.requires_grad = true;
  n.param = name;
  nodes_.push_back(std::move(n));
  auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_ids_.emplace(name, id);
  return Var(this, id);
}

Var Tape::apply(const char* op, std::initializer_list<Var> inputs, ForwardFn forward, BackwardFn backward) {
  Node n;
  n.op = op;
  n.inputs.reserve(inputs.size());
  std::vector<const Tensor*> args;
  args.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (&v.tape() != this) throw ContractError(std::string(op) + ": operand recorded on another tape");
    n.inputs.push_back(v.id());
    n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
    args.push_back(&value(v.id()));
  }
  n.value = forward(args);
  n.forward = std::move(forward);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

const Tensor& Tape::value(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

const Tensor& Tape::grad(std::uint32_t id) { return grad_accumulator(id); }

Tensor& Tape::grad_accumulator(std::uint32_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    const Tensor& v = value(id);
    n.grad = Tensor(v.shape(), std::vector<double>(v.size(), 0.0));
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ContractError("backward: loss recorded on another tape");
  if (value(loss.id()).size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + shape_to_string(value(loss.id()).shape()));
  }
  for (auto& n : nodes_) {
    n.grad = Tensor();
    n.has_grad = false;
  }
  backward_order_.clear();
  grad_accumulator(loss.id())[0] = 1.0;
  for (std::uint32_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.requires_grad || !n.backward) continue;
    backward_order_.push_back(id);
    n.backward(*this, id);
  }
}

void Tape::write_gradients(ParameterStore& store) const {
  store.zero_grad();
  accumulate_gradients(store);
}

void Tape::accumulate_gradients(ParameterStore& store) const {
  for (const auto& [name, id] : param_ids_) {
    const Node& n = nodes_[id];
    if (!n.has_grad) continue;
    Tensor& g = store.grad(name);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
  }
}

std::vector<Tensor> Tape::replay() const {
  std::vector<Tensor> values;
  values.reserve(nodes_.size());
  std::vector<const Tensor*> args;
  for (const Node& n : nodes_) {
    if (!n.forward) {
      values.push_back(n.external ? *n.external : n.value);
      continue;
    }
    args.clear();
    for (auto in : n.inputs) args.push_back(&values[in]);
    values.push_back(n.forward(args));
  }
  return values;
}

void backward(Tape& tape, Var loss, ParameterStore& store) {
  tape.backward(loss);
  tape.write_gradients(store);
}

}  // namespace hgl
