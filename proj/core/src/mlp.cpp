#include "hgl/mlp.hpp"

#include <cmath>

namespace hgl {

Tensor glorot_uniform(std::size_t in, std::size_t out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  Tensor w = Tensor::zeros(in, out);
  for (auto& v : w.data()) v = rng.uniform(-limit, limit);
  return w;
}

AffineNames register_affine(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                            Rng& rng) {
  AffineNames names{prefix + ".w", prefix + ".b"};
  store.add(names.weight, glorot_uniform(in, out, rng));
  store.add(names.bias, Tensor::zeros(1, out));
  return names;
}

Mlp register_mlp(ParameterStore& store, const std::string& prefix, const std::vector<std::size_t>& dims,
                 Activation activation, Rng& rng) {
  if (dims.size() < 2) throw ContractError("register_mlp: need at least input and output widths");
  Mlp mlp;
  mlp.activation = activation;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    mlp.layers.push_back(register_affine(store, prefix + "." + std::to_string(k), dims[k], dims[k + 1], rng));
  }
  return mlp;
}

Var affine(Var x, const ParameterStore& store, const AffineNames& layer) {
  Tape& tape = x.tape();
  return add_bias(matmul(x, tape.parameter(store, layer.weight)), tape.parameter(store, layer.bias));
}

Var mlp_apply(Var x, const ParameterStore& store, const Mlp& mlp) {
  if (mlp.layers.empty()) throw ContractError("mlp_apply: no layers");
  for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
    x = affine(x, store, mlp.layers[k]);
    if (k + 1 < mlp.layers.size()) x = activate(x, mlp.activation);
  }
  return x;
}

}  // namespace hgl
