#include "hgl/fusion_parser.hpp"

namespace hgl {

ParserWeights register_parser(ParameterStore& store, const std::string& prefix, std::size_t dim, std::size_t hidden,
                              Activation activation, bool with_scores, Rng& rng) {
  ParserWeights w;
  if (with_scores) {
    w.joint_vision = prefix + ".joint_vision";
    store.add(w.joint_vision, glorot_uniform(2 * dim, dim, rng));
    w.joint_question = prefix + ".joint_question";
    store.add(w.joint_question, glorot_uniform(2 * dim, dim, rng));
    w.score_vision = register_mlp(store, prefix + ".score_vision", {dim, hidden, 1}, activation, rng);
    w.score_question = register_mlp(store, prefix + ".score_question", {dim, hidden, 1}, activation, rng);
  }
  w.output = register_affine(store, prefix + ".output", dim, dim, rng);
  return w;
}

Var modality_weights(Var obj_pooled, Var query_pooled, Var ans_pooled, const ParameterStore& store,
                     const ParserWeights& w) {
  if (w.joint_vision.empty()) throw ContractError("modality_weights: parser registered without scoring weights");
  Tape& tape = obj_pooled.tape();
  Var s_v = mlp_apply(matmul(concat_cols(obj_pooled, ans_pooled), tape.parameter(store, w.joint_vision)), store,
                      w.score_vision);
  Var s_q = mlp_apply(matmul(concat_cols(query_pooled, ans_pooled), tape.parameter(store, w.joint_question)), store,
                      w.score_question);
  return softmax(concat_cols(s_v, s_q), SoftmaxMode::kGlobal);
}

ModalityWeights modality_values(Var weights) {
  const Tensor& t = weights.value();
  if (t.size() != 2) throw DimensionError("modality weights must be 1x2, got " + shape_to_string(t.shape()));
  return {t[0], t[1]};
}

Var parse(Var y_v, Var y_q, Var weights, const ParameterStore& store, const ParserWeights& w) {
  if (y_v.value().shape() != y_q.value().shape()) {
    throw DimensionError("parse: guided representations " + shape_to_string(y_v.value().shape()) + " and " +
                         shape_to_string(y_q.value().shape()) + " differ");
  }
  Var mixed = add(scale_by(y_v, slice_cols(weights, 0, 1)), scale_by(y_q, slice_cols(weights, 1, 1)));
  return affine(mixed, store, w.output);
}

}  // namespace hgl
