#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hgl/ops.hpp"
#include "hgl/parameter_store.hpp"
#include "hgl/rng.hpp"

namespace hgl {

struct AffineNames {
  std::string weight;  // [in x out]
  std::string bias;    // [1 x out]
};

/// Parameter names of a stack of affine layers. Every layer except the last
/// is followed by `activation`.
struct Mlp {
  std::vector<AffineNames> layers;
  Activation activation = Activation::kRelu;
};

/// Glorot-uniform weights in [-sqrt(6/(in+out)), +sqrt(6/(in+out))].
Tensor glorot_uniform(std::size_t in, std::size_t out, Rng& rng);

AffineNames register_affine(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                            Rng& rng);

/// Registers layers `prefix.0`, `prefix.1`, ... chaining dims[0] -> dims[1] -> ...
Mlp register_mlp(ParameterStore& store, const std::string& prefix, const std::vector<std::size_t>& dims,
                 Activation activation, Rng& rng);

Var affine(Var x, const ParameterStore& store, const AffineNames& layer);
Var mlp_apply(Var x, const ParameterStore& store, const Mlp& mlp);

}  // namespace hgl
