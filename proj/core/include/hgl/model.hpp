#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "hgl/cvm.hpp"
#include "hgl/fusion_parser.hpp"
#include "hgl/hetgraph.hpp"
#include "hgl/instance.hpp"
#include "hgl/parameter_store.hpp"

namespace hgl {

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t channels = 0;
  std::size_t dim = 32;
  std::size_t hidden = 0;  // MLP hidden width; 0 means `dim`
  Activation activation = Activation::kRelu;
  SoftmaxMode adjacency_mode = SoftmaxMode::kGlobal;
  CvmResidualMode cvm_residual = CvmResidualMode::kContext;
  double embedding_scale = 1.0;  // token embedding std = scale / sqrt(dim)
  bool use_vahg = true;
  bool use_qahg = true;
  bool use_cvm = true;

  std::size_t hidden_width() const { return hidden ? hidden : dim; }
  /// Lossless key/value form, stored in checkpoints.
  std::map<std::string, std::string> to_meta() const;
  static ModelConfig from_meta(const std::map<std::string, std::string>& meta);
};

/// Four-way decision. Ties go to the lowest index.
struct Prediction {
  Tensor logits;         // [1 x 4]
  Tensor probabilities;  // [1 x 4]
  std::size_t chosen = 0;
};

Prediction make_prediction(const Tensor& logits);

struct EmbeddedInstance {
  Var grid;      // [P x C], after CVM when enabled
  Var objects;   // [N x d]
  Var question;  // [M x d]
  std::array<Var, kNumCandidates> answers;  // [B_k x d]
  std::optional<Var> votes;                 // [P x P]
};

struct CandidateScore {
  Var logit;  // [1 x 1]
  Var answer_representation;  // Y^a [B x d]
  std::optional<GuidedRepresentation> vision;
  std::optional<GuidedRepresentation> question;
  std::optional<GuidedRepresentation> baseline;
  std::optional<Var> modality;  // [1 x 2]
};

struct ForwardPass {
  EmbeddedInstance embedded;
  std::array<CandidateScore, kNumCandidates> candidates;
  Var logits;  // [1 x 4]
};

/// End-to-end multiple-choice model: CVM over the scene grid, VAHG and QAHG
/// per candidate, adaptive parser, mean-pool + affine head.
///
/// Disabling both graphs swaps in an answer-to-answer (homogeneous) graph so
/// the baseline still has a reasoning layer of the same shape.
class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  ParameterStore& params() noexcept { return params_; }
  const ParameterStore& params() const noexcept { return params_; }

  EmbeddedInstance embed(Tape& tape, const Instance& instance) const;
  CandidateScore score_candidate(Var x_obj, Var x_query, Var x_ans) const;
  ForwardPass forward(Tape& tape, const Instance& instance) const;
  Prediction predict(const Instance& instance) const;

 private:
  ModelConfig config_;
  ParameterStore params_;
  std::string token_embedding_;
  std::string object_projection_;
  std::optional<CvmWeights> cvm_;
  std::optional<GraphModuleWeights> vahg_;
  std::optional<GraphModuleWeights> qahg_;
  std::optional<GraphModuleWeights> baseline_;
  ParserWeights parser_;
  AffineNames classifier_;
};

/// -log p[gold] for a [1 x 4] logit row.
Var loss(Var logits, std::size_t gold);

}  // namespace hgl
