#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>

#include "hgl/mlp.hpp"

namespace hgl {

/// How voting weights meet the aggregated features in the residual update.
///   kContext: out_i = (sum_j a[i][j] y_j) W_a + x_i
///   kSelf:    out_i = (sum_j a[i][j]) y_i W_a + x_i
enum class CvmResidualMode { kContext, kSelf };

std::string_view to_string(CvmResidualMode mode);
CvmResidualMode parse_cvm_residual_mode(std::string_view text);

/// Weights of the contextual voting block over a [P x C] feature map.
/// Every projection is a 1x1 convolution, i.e. a per-position affine map.
struct CvmWeights {
  AffineNames theta_f;    // affinity embedding, C -> C
  AffineNames theta_g;    // value map, C -> C
  std::string phi_left;   // [C x C], pairwise feature, position i half
  std::string phi_right;  // [C x C], position j half
  std::string phi_bias;   // [1 x C]
  std::string vote_score; // W_na [C x 1]
  std::string vote_proj;  // W_a [C x C]
  Activation phi_activation = Activation::kRelu;
};

struct CvmOutput {
  Var features;  // [P x C]
  Var votes;     // [P x P], row i holds a_{j -> i} over j
};

CvmWeights register_cvm(ParameterStore& store, const std::string& prefix, std::size_t channels,
                        Activation activation, Rng& rng);

/// y_i = (1/P) sum_j <f(x_i), f(x_j)> g(x_j).
Var nonlocal_aggregate(Var x, const ParameterStore& store, const CvmWeights& w);
/// a[i][j] = softmax_j(W_na . phi([x_i, x_j])); rows sum to one.
Var voting_weights(Var x, const ParameterStore& store, const CvmWeights& w);
Var residual_update(Var x, Var y, Var votes, const ParameterStore& store, const CvmWeights& w,
                    CvmResidualMode mode = CvmResidualMode::kContext);
CvmOutput cvm_forward(Var x, const ParameterStore& store, const CvmWeights& w,
                      CvmResidualMode mode = CvmResidualMode::kContext);

/// Voting weights as CSV with `row,col` grid coordinates for both ends:
/// `to_row,to_col,from_row,from_col,weight`.
void write_votes_csv(std::ostream& os, const Tensor& votes, std::size_t grid_cols);

}  // namespace hgl
