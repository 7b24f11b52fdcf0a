#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "hgl/mlp.hpp"
#include "hgl/ops.hpp"
#include "hgl/parameter_store.hpp"
#include "hgl/rng.hpp"

namespace hgl {

/// Cross-domain edge weights from SRC source nodes (objects or question words)
/// to B answer words. Entries are positive and sum to one over the whole
/// matrix (global mode) or over each source row (per-row mode).
struct HeterogeneousAdjacency {
  Tensor weights;  // [SRC x B]
  SoftmaxMode mode = SoftmaxMode::kGlobal;
};

/// Parameter names for one heterogeneous graph module. VAHG and QAHG each own
/// an instance; nothing is shared between them.
struct GraphModuleWeights {
  std::string reason;     // [d x d], propagates source features to answer nodes
  Mlp encoder;            // answer word encoder, d -> d
  std::string attention;  // [d x 1], per-word attention score
  Mlp fuse;               // [x_m, y] -> middle representation, 2d -> d
  std::string map_src;    // [d x d]
  std::string map_mid;    // [d x d]
  std::string senior;     // [d x d]
  Mlp guide_inner;        // d -> d
  Mlp guide_outer;        // d -> d
};

struct GraphModuleConfig {
  SoftmaxMode adjacency_mode = SoftmaxMode::kGlobal;
  Activation delta = Activation::kRelu;  // nonlinearity after A^T X W
};

enum class GraphSource { kVision, kQuestion, kAnswer };

/// B x d output of a graph module plus the intermediates worth inspecting.
struct GuidedRepresentation {
  Var values;     // [B x d]
  GraphSource source = GraphSource::kVision;
  Var adjacency;  // [SRC x B]
  Var evolved;    // [B x d]
};

/// Registers every weight of one module under `prefix`. MLPs get a single
/// hidden layer of width `hidden`.
GraphModuleWeights register_graph_module(ParameterStore& store, const std::string& prefix, std::size_t dim,
                                         std::size_t hidden, Activation activation, Rng& rng);

/// A = softmax(X_src X_ans^T) under `mode`.
Var compute_adjacency(Var x_src, Var x_ans, SoftmaxMode mode);
/// delta(A^T X_src W).
Var graph_reason(Var adjacency, Var x_src, Var weight, Activation delta);
/// Encodes answer words, scores them with a softmax over the B words, and
/// scales each encoded word by its attention value.
Var word_attention(Var x_ans, const ParameterStore& store, const GraphModuleWeights& w);
/// f([x_m, y]) row by row.
Var middle_fuse(Var x_m, Var y_evolved, const ParameterStore& store, const Mlp& fuse);
/// outer(inner(y W_src + x_middle W_mid) W_senior).
Var guide(Var y_evolved, Var x_middle, const ParameterStore& store, const GraphModuleWeights& w);

/// adjacency -> reasoning -> word attention -> middle fusion -> guidance.
GuidedRepresentation graph_module_forward(Var x_src, Var x_ans, const ParameterStore& store,
                                          const GraphModuleWeights& w, const GraphModuleConfig& config,
                                          GraphSource source);

inline GuidedRepresentation vahg_forward(Var x_obj, Var x_ans, const ParameterStore& store,
                                         const GraphModuleWeights& w, const GraphModuleConfig& config) {
  return graph_module_forward(x_obj, x_ans, store, w, config, GraphSource::kVision);
}

inline GuidedRepresentation qahg_forward(Var x_query, Var x_ans, const ParameterStore& store,
                                         const GraphModuleWeights& w, const GraphModuleConfig& config) {
  return graph_module_forward(x_query, x_ans, store, w, config, GraphSource::kQuestion);
}

/// Positivity and normalisation check for an adjacency value.
bool adjacency_is_normalized(const HeterogeneousAdjacency& adj, double tolerance);

/// Aligned text table with row and column labels.
void write_adjacency_table(std::ostream& os, const HeterogeneousAdjacency& adj,
                           const std::vector<std::string>& row_labels, const std::vector<std::string>& col_labels);
/// CSV: header `source,<col labels...>`, then one line per source row.
void write_adjacency_csv(std::ostream& os, const HeterogeneousAdjacency& adj,
                         const std::vector<std::string>& row_labels, const std::vector<std::string>& col_labels);

}  // namespace hgl
