#include "hgl/model.hpp"

#include <cmath>
#include <cstdio>

#include "hgl/checkpoint.hpp"

namespace hgl {
namespace {

const std::string& require(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw CheckpointError("checkpoint meta is missing '" + key + "'");
  return it->second;
}

bool parse_flag(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw CheckpointError("meta '" + key + "' is not a boolean: " + text);
}

}  // namespace

std::map<std::string, std::string> ModelConfig::to_meta() const {
  char scale[32];
  std::snprintf(scale, sizeof scale, "%.17g", embedding_scale);
  return {
      {"model.vocab_size", std::to_string(vocab_size)},
      {"model.channels", std::to_string(channels)},
      {"model.dim", std::to_string(dim)},
      {"model.hidden", std::to_string(hidden_width())},
      {"model.activation", std::string(to_string(activation))},
      {"model.adjacency_mode", std::string(to_string(adjacency_mode))},
      {"model.cvm_residual", std::string(to_string(cvm_residual))},
      {"model.embedding_scale", scale},
      {"model.use_vahg", use_vahg ? "1" : "0"},
      {"model.use_qahg", use_qahg ? "1" : "0"},
      {"model.use_cvm", use_cvm ? "1" : "0"},
  };
}

ModelConfig ModelConfig::from_meta(const std::map<std::string, std::string>& meta) {
  ModelConfig c;
  try {
    c.vocab_size = std::stoul(require(meta, "model.vocab_size"));
    c.channels = std::stoul(require(meta, "model.channels"));
    c.dim = std::stoul(require(meta, "model.dim"));
    c.hidden = std::stoul(require(meta, "model.hidden"));
    c.embedding_scale = std::stod(require(meta, "model.embedding_scale"));
  } catch (const std::logic_error&) {
    throw CheckpointError("malformed numeric value in model meta");
  }
  c.activation = parse_activation(require(meta, "model.activation"));
  c.adjacency_mode = parse_softmax_mode(require(meta, "model.adjacency_mode"));
  c.cvm_residual = parse_cvm_residual_mode(require(meta, "model.cvm_residual"));
  c.use_vahg = parse_flag("model.use_vahg", require(meta, "model.use_vahg"));
  c.use_qahg = parse_flag("model.use_qahg", require(meta, "model.use_qahg"));
  c.use_cvm = parse_flag("model.use_cvm", require(meta, "model.use_cvm"));
  return c;
}

Prediction make_prediction(const Tensor& logits) {
  if (logits.rank() != 2 || logits.rows() != 1 || logits.cols() != kNumCandidates) {
    throw DimensionError("prediction expects 1x4 logits, got " + shape_to_string(logits.shape()));
  }
  Prediction p;
  p.logits = logits;
  p.probabilities = softmax(logits, SoftmaxMode::kGlobal);
  for (std::size_t k = 1; k < kNumCandidates; ++k) {
    if (logits[k] > logits[p.chosen]) p.chosen = k;
  }
  return p;
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  if (config_.vocab_size == 0 || config_.channels == 0 || config_.dim == 0) {
    throw ContractError("model config needs positive vocab_size, channels and dim");
  }
  Rng rng(seed);
  const std::size_t d = config_.dim;
  const std::size_t h = config_.hidden_width();
  const Activation act = config_.activation;

  token_embedding_ = "embed.tokens";
  Tensor table = Tensor::zeros(config_.vocab_size, d);
  const double std_dev = config_.embedding_scale / std::sqrt(static_cast<double>(d));
  for (auto& v : table.data()) v = std_dev * rng.normal();
  params_.add(token_embedding_, std::move(table));
  object_projection_ = "embed.objects";
  params_.add(object_projection_, glorot_uniform(config_.channels, d, rng));

  if (config_.use_cvm) cvm_ = register_cvm(params_, "cvm", config_.channels, act, rng);
  if (config_.use_vahg) vahg_ = register_graph_module(params_, "vahg", d, h, act, rng);
  if (config_.use_qahg) qahg_ = register_graph_module(params_, "qahg", d, h, act, rng);
  if (!config_.use_vahg && !config_.use_qahg) baseline_ = register_graph_module(params_, "baseline", d, h, act, rng);
  parser_ = register_parser(params_, "parser", d, h, act, config_.use_vahg && config_.use_qahg, rng);

  // Zero head: an untrained model scores every candidate identically.
  classifier_ = {"classifier.w", "classifier.b"};
  params_.add(classifier_.weight, Tensor::zeros(d, 1));
  params_.add(classifier_.bias, Tensor::zeros(1, 1));
}

EmbeddedInstance Model::embed(Tape& tape, const Instance& instance) const {
  if (instance.scene.rank() != 2 || instance.scene.cols() != config_.channels) {
    throw DimensionError("scene " + shape_to_string(instance.scene.shape()) + " does not have " +
                         std::to_string(config_.channels) + " channels");
  }
  EmbeddedInstance e;
  e.grid = tape.constant(instance.scene);
  if (cvm_) {
    CvmOutput out = cvm_forward(e.grid, params_, *cvm_, config_.cvm_residual);
    e.grid = out.features;
    e.votes = out.votes;
  }
  e.objects = matmul(pool_rows(e.grid, instance.boxes), tape.parameter(params_, object_projection_));
  Var table = tape.parameter(params_, token_embedding_);
  e.question = gather_rows(table, instance.question);
  for (std::size_t k = 0; k < kNumCandidates; ++k) e.answers[k] = gather_rows(table, instance.candidates[k]);
  return e;
}

CandidateScore Model::score_candidate(Var x_obj, Var x_query, Var x_ans) const {
  Tape& tape = x_ans.tape();
  const GraphModuleConfig graph_cfg{config_.adjacency_mode, config_.activation};
  CandidateScore s;
  if (vahg_) s.vision = vahg_forward(x_obj, x_ans, params_, *vahg_, graph_cfg);
  if (qahg_) s.question = qahg_forward(x_query, x_ans, params_, *qahg_, graph_cfg);

  if (s.vision && s.question) {
    s.modality = modality_weights(mean_rows(x_obj), mean_rows(x_query), mean_rows(x_ans), params_, parser_);
    s.answer_representation = parse(s.vision->values, s.question->values, *s.modality, params_, parser_);
  } else if (s.vision || s.question) {
    // A disabled branch contributes nothing: the pair is pinned, not learned.
    const bool vision = s.vision.has_value();
    Var present = vision ? s.vision->values : s.question->values;
    Var absent = tape.constant(Tensor::zeros(present.rows(), present.cols()));
    s.modality = tape.constant(vision ? Tensor::row({1.0, 0.0}) : Tensor::row({0.0, 1.0}));
    s.answer_representation =
        vision ? parse(present, absent, *s.modality, params_, parser_) : parse(absent, present, *s.modality, params_, parser_);
  } else {
    s.baseline = graph_module_forward(x_ans, x_ans, params_, *baseline_, graph_cfg, GraphSource::kAnswer);
    s.answer_representation = affine(s.baseline->values, params_, parser_.output);
  }
  s.logit = affine(mean_rows(s.answer_representation), params_, classifier_);
  return s;
}

ForwardPass Model::forward(Tape& tape, const Instance& instance) const {
  validate_instance(instance, config_.vocab_size);
  ForwardPass pass;
  pass.embedded = embed(tape, instance);
  for (std::size_t k = 0; k < kNumCandidates; ++k) {
    pass.candidates[k] = score_candidate(pass.embedded.objects, pass.embedded.question, pass.embedded.answers[k]);
  }
  Var logits = pass.candidates[0].logit;
  for (std::size_t k = 1; k < kNumCandidates; ++k) logits = concat_cols(logits, pass.candidates[k].logit);
  pass.logits = logits;
  return pass;
}

Prediction Model::predict(const Instance& instance) const {
  Tape tape;
  return make_prediction(forward(tape, instance).logits.value());
}

Var loss(Var logits, std::size_t gold) { return cross_entropy(logits, gold); }

}  // namespace hgl
