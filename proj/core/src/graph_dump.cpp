#include "hgl/graph_dump.hpp"

#include <cstdio>
#include <fstream>

#include "hgl/cvm.hpp"
#include "hgl/tape.hpp"

namespace hgl {
namespace {

std::vector<std::string> token_labels(const TokenSequence& seq) {
  std::vector<std::string> out;
  for (auto t : seq) out.push_back(std::to_string(t));
  return out;
}

std::ofstream open_for_writing(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

GraphDump dump_graphs(const Model& model, const Instance& instance) {
  Tape tape;
  const ForwardPass pass = model.forward(tape, instance);
  const SoftmaxMode mode = model.config().adjacency_mode;
  GraphDump dump;
  for (std::size_t n = 0; n < instance.boxes.size(); ++n) dump.object_labels.push_back("obj" + std::to_string(n));
  dump.question_labels = token_labels(instance.question);
  for (std::size_t k = 0; k < kNumCandidates; ++k) {
    dump.answer_labels[k] = token_labels(instance.candidates[k]);
    const CandidateScore& c = pass.candidates[k];
    if (c.vision) dump.vahg[k] = HeterogeneousAdjacency{c.vision->adjacency.value(), mode};
    if (c.question) dump.qahg[k] = HeterogeneousAdjacency{c.question->adjacency.value(), mode};
  }
  if (pass.embedded.votes) dump.votes = pass.embedded.votes->value();
  dump.logits = pass.logits.value();
  return dump;
}

void write_graph_tables(std::ostream& os, const GraphDump& dump, std::size_t grid_cols) {
  char buf[64];
  os << "logits";
  for (std::size_t k = 0; k < kNumCandidates; ++k) {
    std::snprintf(buf, sizeof buf, " %.6f", dump.logits[k]);
    os << buf;
  }
  os << "\n\n";
  for (std::size_t k = 0; k < kNumCandidates; ++k) {
    if (dump.vahg[k]) {
      os << "VAHG candidate " << k << " (objects x answer tokens)\n";
      write_adjacency_table(os, *dump.vahg[k], dump.object_labels, dump.answer_labels[k]);
      os << '\n';
    }
    if (dump.qahg[k]) {
      os << "QAHG candidate " << k << " (question tokens x answer tokens)\n";
      write_adjacency_table(os, *dump.qahg[k], dump.question_labels, dump.answer_labels[k]);
      os << '\n';
    }
  }
  if (dump.votes) {
    const Tensor& v = *dump.votes;
    os << "CVM voting weights (row = receiving cell r,c; column = voting cell)\n" << "      ";
    for (std::size_t j = 0; j < v.cols(); ++j) {
      std::snprintf(buf, sizeof buf, " %6s", (std::to_string(j / grid_cols) + "," + std::to_string(j % grid_cols)).c_str());
      os << buf;
    }
    os << '\n';
    for (std::size_t i = 0; i < v.rows(); ++i) {
      std::snprintf(buf, sizeof buf, "%6s", (std::to_string(i / grid_cols) + "," + std::to_string(i % grid_cols)).c_str());
      os << buf;
      for (std::size_t j = 0; j < v.cols(); ++j) {
        std::snprintf(buf, sizeof buf, " %6.4f", v(i, j));
        os << buf;
      }
      os << '\n';
    }
  }
}

void write_graph_dump(const GraphDump& dump, std::size_t grid_cols, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_for_writing(dir / "graphs.txt");
    write_graph_tables(out, dump, grid_cols);
  }
  for (std::size_t k = 0; k < kNumCandidates; ++k) {
    if (dump.vahg[k]) {
      auto out = open_for_writing(dir / ("vahg_c" + std::to_string(k) + ".csv"));
      write_adjacency_csv(out, *dump.vahg[k], dump.object_labels, dump.answer_labels[k]);
    }
    if (dump.qahg[k]) {
      auto out = open_for_writing(dir / ("qahg_c" + std::to_string(k) + ".csv"));
      write_adjacency_csv(out, *dump.qahg[k], dump.question_labels, dump.answer_labels[k]);
    }
  }
  if (dump.votes) {
    auto out = open_for_writing(dir / "votes.csv");
    write_votes_csv(out, *dump.votes, grid_cols);
  }
}

}  // namespace hgl
