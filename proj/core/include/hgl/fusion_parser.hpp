#pragma once

#include <cstddef>
#include <string>

#include "hgl/hetgraph.hpp"
#include "hgl/mlp.hpp"

namespace hgl {

struct ParserWeights {
  std::string joint_vision;    // W_oa [2d x d]
  std::string joint_question;  // W_qa [2d x d]
  Mlp score_vision;            // d -> 1
  Mlp score_question;          // d -> 1
  AffineNames output;          // F, d -> d
};

/// Plain-value view of the two modality weights (w_o + w_q = 1).
struct ModalityWeights {
  double vision = 0.5;
  double question = 0.5;
};

/// `with_scores` = false registers only the output map F, which is all the
/// single-graph and baseline configurations use.
ParserWeights register_parser(ParameterStore& store, const std::string& prefix, std::size_t dim, std::size_t hidden,
                              Activation activation, bool with_scores, Rng& rng);

/// Two-way softmax over s_v = score_v([x_obj, x_ans] W_oa) and
/// s_q = score_q([x_query, x_ans] W_qa). Inputs are pooled 1 x d summaries.
/// Returns a 1x2 tensor (w_o, w_q).
Var modality_weights(Var obj_pooled, Var query_pooled, Var ans_pooled, const ParameterStore& store,
                     const ParserWeights& w);

ModalityWeights modality_values(Var weights);

/// F(w_o y_v + w_q y_q). `weights` is the 1x2 output of modality_weights or a
/// constant pair.
Var parse(Var y_v, Var y_q, Var weights, const ParameterStore& store, const ParserWeights& w);

}  // namespace hgl
