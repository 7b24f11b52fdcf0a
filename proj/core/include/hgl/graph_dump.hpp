#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hgl/hetgraph.hpp"
#include "hgl/model.hpp"

namespace hgl {

/// Learned graphs of one instance: the VAHG (objects x answer words) and QAHG
/// (question words x answer words) adjacency of every candidate, and the CVM
/// voting weights over grid positions. Absent when the module is disabled.
struct GraphDump {
  std::array<std::optional<HeterogeneousAdjacency>, kNumCandidates> vahg;
  std::array<std::optional<HeterogeneousAdjacency>, kNumCandidates> qahg;
  std::optional<Tensor> votes;  // [P x P], row = receiving position
  std::vector<std::string> object_labels;                            // obj0, obj1, ...
  std::vector<std::string> question_labels;                          // token ids
  std::array<std::vector<std::string>, kNumCandidates> answer_labels;  // token ids
  Tensor logits;
};

GraphDump dump_graphs(const Model& model, const Instance& instance);

/// Aligned text tables for every matrix.
void write_graph_tables(std::ostream& os, const GraphDump& dump, std::size_t grid_cols);

/// Writes graphs.txt plus vahg_c<k>.csv, qahg_c<k>.csv and votes.csv under `dir`.
void write_graph_dump(const GraphDump& dump, std::size_t grid_cols, const std::filesystem::path& dir);

}  // namespace hgl
