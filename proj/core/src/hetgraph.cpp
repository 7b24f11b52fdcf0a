#include "hgl/hetgraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>

namespace hgl {

GraphModuleWeights register_graph_module(ParameterStore& store, const std::string& prefix, std::size_t dim,
                                         std::size_t hidden, Activation activation, Rng& rng) {
  GraphModuleWeights w;
  w.reason = prefix + ".reason";
  store.add(w.reason, glorot_uniform(dim, dim, rng));
  w.encoder = register_mlp(store, prefix + ".encoder", {dim, hidden, dim}, activation, rng);
  w.attention = prefix + ".attention";
  store.add(w.attention, glorot_uniform(dim, 1, rng));
  w.fuse = register_mlp(store, prefix + ".fuse", {2 * dim, hidden, dim}, activation, rng);
  w.map_src = prefix + ".map_src";
  store.add(w.map_src, glorot_uniform(dim, dim, rng));
  w.map_mid = prefix + ".map_mid";
  store.add(w.map_mid, glorot_uniform(dim, dim, rng));
  w.senior = prefix + ".senior";
  store.add(w.senior, glorot_uniform(dim, dim, rng));
  w.guide_inner = register_mlp(store, prefix + ".guide_inner", {dim, hidden, dim}, activation, rng);
  w.guide_outer = register_mlp(store, prefix + ".guide_outer", {dim, hidden, dim}, activation, rng);
  return w;
}

Var compute_adjacency(Var x_src, Var x_ans, SoftmaxMode mode) {
  if (x_src.cols() != x_ans.cols()) {
    throw DimensionError("compute_adjacency: feature width " + std::to_string(x_src.cols()) + " vs " +
                         std::to_string(x_ans.cols()));
  }
  return softmax(matmul(x_src, transpose(x_ans)), mode);
}

Var graph_reason(Var adjacency, Var x_src, Var weight, Activation delta) {
  if (adjacency.rows() != x_src.rows()) {
    throw DimensionError("graph_reason: adjacency has " + std::to_string(adjacency.rows()) + " source rows, features " +
                         std::to_string(x_src.rows()));
  }
  return activate(matmul(matmul(transpose(adjacency), x_src), weight), delta);
}

Var word_attention(Var x_ans, const ParameterStore& store, const GraphModuleWeights& w) {
  Var encoded = mlp_apply(x_ans, store, w.encoder);
  Var scores = matmul(encoded, x_ans.tape().parameter(store, w.attention));
  return scale_rows(encoded, softmax(scores, SoftmaxMode::kGlobal));
}

Var middle_fuse(Var x_m, Var y_evolved, const ParameterStore& store, const Mlp& fuse) {
  return mlp_apply(concat_cols(x_m, y_evolved), store, fuse);
}

Var guide(Var y_evolved, Var x_middle, const ParameterStore& store, const GraphModuleWeights& w) {
  Tape& tape = y_evolved.tape();
  Var common = add(matmul(y_evolved, tape.parameter(store, w.map_src)),
                   matmul(x_middle, tape.parameter(store, w.map_mid)));
  Var inner = mlp_apply(common, store, w.guide_inner);
  return mlp_apply(matmul(inner, tape.parameter(store, w.senior)), store, w.guide_outer);
}

GuidedRepresentation graph_module_forward(Var x_src, Var x_ans, const ParameterStore& store,
                                          const GraphModuleWeights& w, const GraphModuleConfig& config,
                                          GraphSource source) {
  GuidedRepresentation out;
  out.source = source;
  out.adjacency = compute_adjacency(x_src, x_ans, config.adjacency_mode);
  out.evolved = graph_reason(out.adjacency, x_src, x_src.tape().parameter(store, w.reason), config.delta);
  Var x_m = word_attention(x_ans, store, w);
  Var x_middle = middle_fuse(x_m, out.evolved, store, w.fuse);
  out.values = guide(out.evolved, x_middle, store, w);
  return out;
}

bool adjacency_is_normalized(const HeterogeneousAdjacency& adj, double tolerance) {
  const Tensor& a = adj.weights;
  if (a.empty()) return false;
  for (double v : a.data())
    if (!(v > 0.0) || !std::isfinite(v)) return false;
  if (adj.mode == SoftmaxMode::kGlobal) {
    double total = 0.0;
    for (double v : a.data()) total += v;
    return std::abs(total - 1.0) <= tolerance;
  }
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) total += a(r, c);
    if (std::abs(total - 1.0) > tolerance) return false;
  }
  return true;
}

namespace {

void check_labels(const HeterogeneousAdjacency& adj, const std::vector<std::string>& rows,
                  const std::vector<std::string>& cols) {
  if (rows.size() != adj.weights.rows() || cols.size() != adj.weights.cols()) {
    throw DimensionError("adjacency labels " + std::to_string(rows.size()) + "x" + std::to_string(cols.size()) +
                         " do not match " + shape_to_string(adj.weights.shape()));
  }
}

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

}  // namespace

void write_adjacency_table(std::ostream& os, const HeterogeneousAdjacency& adj,
                           const std::vector<std::string>& row_labels, const std::vector<std::string>& col_labels) {
  check_labels(adj, row_labels, col_labels);
  std::size_t label_w = 6;
  for (const auto& l : row_labels) label_w = std::max(label_w, l.size());
  std::size_t cell_w = 8;
  for (const auto& l : col_labels) cell_w = std::max(cell_w, l.size() + 1);
  os << std::left << std::setw(static_cast<int>(label_w)) << "source";
  for (const auto& l : col_labels) os << std::right << std::setw(static_cast<int>(cell_w)) << l;
  os << '\n';
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    os << std::left << std::setw(static_cast<int>(label_w)) << row_labels[r];
    for (std::size_t c = 0; c < col_labels.size(); ++c) {
      os << std::right << std::setw(static_cast<int>(cell_w)) << fixed(adj.weights(r, c), 4);
    }
    os << '\n';
  }
}

void write_adjacency_csv(std::ostream& os, const HeterogeneousAdjacency& adj,
                         const std::vector<std::string>& row_labels, const std::vector<std::string>& col_labels) {
  check_labels(adj, row_labels, col_labels);
  os << "source";
  for (const auto& l : col_labels) os << ',' << l;
  os << '\n';
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    os << row_labels[r];
    for (std::size_t c = 0; c < col_labels.size(); ++c) os << ',' << fixed(adj.weights(r, c), 10);
    os << '\n';
  }
}

}  // namespace hgl
