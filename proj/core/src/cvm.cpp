#include "hgl/cvm.hpp"

#include <cstdio>

namespace hgl {

std::string_view to_string(CvmResidualMode mode) { return mode == CvmResidualMode::kContext ? "context" : "self"; }

CvmResidualMode parse_cvm_residual_mode(std::string_view text) {
  if (text == "context") return CvmResidualMode::kContext;
  if (text == "self") return CvmResidualMode::kSelf;
  throw ContractError("unknown cvm residual mode '" + std::string(text) + "' (expected context|self)");
}

CvmWeights register_cvm(ParameterStore& store, const std::string& prefix, std::size_t channels,
                        Activation activation, Rng& rng) {
  CvmWeights w;
  w.phi_activation = activation;
  w.theta_f = register_affine(store, prefix + ".theta_f", channels, channels, rng);
  w.theta_g = register_affine(store, prefix + ".theta_g", channels, channels, rng);
  w.phi_left = prefix + ".phi_left";
  store.add(w.phi_left, glorot_uniform(channels, channels, rng));
  w.phi_right = prefix + ".phi_right";
  store.add(w.phi_right, glorot_uniform(channels, channels, rng));
  w.phi_bias = prefix + ".phi_bias";
  store.add(w.phi_bias, Tensor::zeros(1, channels));
  w.vote_score = prefix + ".vote_score";
  store.add(w.vote_score, glorot_uniform(channels, 1, rng));
  w.vote_proj = prefix + ".vote_proj";
  store.add(w.vote_proj, Tensor::zeros(channels, channels));
  return w;
}

Var nonlocal_aggregate(Var x, const ParameterStore& store, const CvmWeights& w) {
  Var embedded = affine(x, store, w.theta_f);
  Var values = affine(x, store, w.theta_g);
  Var affinity = matmul(embedded, transpose(embedded));
  return scale(matmul(affinity, values), 1.0 / static_cast<double>(x.rows()));
}

Var voting_weights(Var x, const ParameterStore& store, const CvmWeights& w) {
  Tape& tape = x.tape();
  Var left = add_bias(matmul(x, tape.parameter(store, w.phi_left)), tape.parameter(store, w.phi_bias));
  Var right = matmul(x, tape.parameter(store, w.phi_right));
  Var scores = pairwise_score(left, right, tape.parameter(store, w.vote_score), w.phi_activation);
  return softmax(scores, SoftmaxMode::kPerRow);
}

Var residual_update(Var x, Var y, Var votes, const ParameterStore& store, const CvmWeights& w,
                    CvmResidualMode mode) {
  if (x.value().shape() != y.value().shape()) {
    throw DimensionError("residual_update: input " + shape_to_string(x.value().shape()) + " vs aggregate " +
                         shape_to_string(y.value().shape()));
  }
  if (votes.rows() != x.rows() || votes.cols() != x.rows()) {
    throw DimensionError("residual_update: votes " + shape_to_string(votes.value().shape()) + " for " +
                         std::to_string(x.rows()) + " positions");
  }
  Tape& tape = x.tape();
  Var gathered;
  if (mode == CvmResidualMode::kContext) {
    gathered = matmul(votes, y);
  } else {
    Var mass = matmul(votes, tape.constant(Tensor::filled(x.rows(), 1, 1.0)));
    gathered = scale_rows(y, mass);
  }
  return add(matmul(gathered, tape.parameter(store, w.vote_proj)), x);
}

CvmOutput cvm_forward(Var x, const ParameterStore& store, const CvmWeights& w, CvmResidualMode mode) {
  Var y = nonlocal_aggregate(x, store, w);
  Var votes = voting_weights(x, store, w);
  return {residual_update(x, y, votes, store, w, mode), votes};
}

void write_votes_csv(std::ostream& os, const Tensor& votes, std::size_t grid_cols) {
  if (grid_cols == 0 || votes.rows() % grid_cols != 0) {
    throw DimensionError("write_votes_csv: " + std::to_string(votes.rows()) + " positions do not tile " +
                         std::to_string(grid_cols) + " columns");
  }
  os << "to_row,to_col,from_row,from_col,weight\n";
  char buf[32];
  for (std::size_t i = 0; i < votes.rows(); ++i) {
    for (std::size_t j = 0; j < votes.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.10f", votes(i, j));
      os << i / grid_cols << ',' << i % grid_cols << ',' << j / grid_cols << ',' << j % grid_cols << ',' << buf << '\n';
    }
  }
}

}  // namespace hgl
