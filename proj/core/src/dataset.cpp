#include "hgl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace hgl {
namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kMetaPrefix = "#meta ";

Json sequence_to_json(const TokenSequence& seq) { return Json(seq); }

Json instance_to_json(const Instance& inst) {
  Json scene = Json::array();
  for (std::size_t r = 0; r < inst.scene.rows(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < inst.scene.cols(); ++c) row.push_back(inst.scene(r, c));
    scene.push_back(std::move(row));
  }
  Json candidates = Json::array();
  for (const auto& cand : inst.candidates) candidates.push_back(sequence_to_json(cand));
  Json j;
  j["scene"] = std::move(scene);
  j["boxes"] = inst.boxes;
  j["question"] = sequence_to_json(inst.question);
  j["candidates"] = std::move(candidates);
  j["gold"] = inst.gold;
  j["task"] = std::string(to_string(inst.task));
  return j;
}

class LineParser {
 public:
  LineParser(std::string origin, std::size_t line) : origin_(std::move(origin)), line_(line) {}

  [[noreturn]] void fail(const std::string& why) const {
    throw DatasetError(origin_ + ":" + std::to_string(line_) + ": " + why);
  }

  std::size_t index(const Json& j, const char* what) const {
    if (!j.is_number_unsigned()) fail(std::string(what) + " must be a non-negative integer");
    return j.get<std::size_t>();
  }

  TokenSequence sequence(const Json& j, const char* what) const {
    if (!j.is_array()) fail(std::string(what) + " must be an integer list");
    TokenSequence out;
    out.reserve(j.size());
    for (const auto& v : j) out.push_back(index(v, what));
    return out;
  }

  Instance instance(const Json& j) const {
    static const char* kFields[] = {"scene", "boxes", "question", "candidates", "gold", "task"};
    if (!j.is_object()) fail("instance must be a JSON object");
    for (const char* f : kFields)
      if (!j.contains(f)) fail(std::string("missing field '") + f + "'");
    if (j.size() != std::size(kFields)) {
      for (const auto& [key, _] : j.items()) {
        if (std::find(std::begin(kFields), std::end(kFields), key) == std::end(kFields)) {
          fail("unexpected field '" + key + "'");
        }
      }
    }

    Instance inst;
    const Json& scene = j["scene"];
    if (!scene.is_array() || scene.empty()) fail("scene must be a non-empty P x C array");
    const std::size_t cols = scene[0].is_array() ? scene[0].size() : 0;
    if (cols == 0) fail("scene rows must be non-empty arrays");
    std::vector<double> values;
    values.reserve(scene.size() * cols);
    for (const auto& row : scene) {
      if (!row.is_array() || row.size() != cols) fail("scene rows must all have " + std::to_string(cols) + " entries");
      for (const auto& v : row) {
        if (!v.is_number()) fail("scene entries must be numbers");
        values.push_back(v.get<double>());
      }
    }
    inst.scene = Tensor({scene.size(), cols}, std::move(values));

    const Json& boxes = j["boxes"];
    if (!boxes.is_array()) fail("boxes must be a list of cell-index lists");
    for (const auto& b : boxes) inst.boxes.push_back(sequence(b, "box cell"));
    inst.question = sequence(j["question"], "question");

    const Json& cands = j["candidates"];
    if (!cands.is_array()) fail("candidates must be a list");
    if (cands.size() != kNumCandidates) {
      fail("expected " + std::to_string(kNumCandidates) + " candidates, got " + std::to_string(cands.size()));
    }
    for (std::size_t k = 0; k < kNumCandidates; ++k) inst.candidates[k] = sequence(cands[k], "candidate");
    inst.gold = index(j["gold"], "gold");
    if (!j["task"].is_string()) fail("task must be a string");
    try {
      inst.task = parse_task(j["task"].get<std::string>());
      validate_instance(inst);
    } catch (const InstanceError& e) {
      fail(e.what());
    }
    return inst;
  }

 private:
  std::string origin_;
  std::size_t line_;
};

bool same_scene(const Instance& a, const Instance& b) { return a.scene == b.scene && a.boxes == b.boxes; }

}  // namespace

std::string serialize_dataset(const Dataset& dataset) {
  std::string out = kMetaPrefix;
  out += Json(dataset.metadata).dump();
  out += '\n';
  for (const auto& inst : dataset.instances) {
    out += instance_to_json(inst).dump();
    out += '\n';
  }
  return out;
}

Dataset parse_dataset(const std::string& text, const std::string& origin) {
  Dataset ds;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool saw_meta = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    LineParser p(origin, line_no);
    if (line.rfind(kMetaPrefix, 0) == 0) {
      if (saw_meta || !ds.instances.empty()) p.fail("#meta header must be the first line");
      saw_meta = true;
      Json meta;
      try {
        meta = Json::parse(line.substr(std::char_traits<char>::length(kMetaPrefix)));
      } catch (const Json::parse_error& e) {
        p.fail(std::string("malformed #meta JSON: ") + e.what());
      }
      if (!meta.is_object()) p.fail("#meta must be a JSON object");
      for (const auto& [key, value] : meta.items()) {
        if (!value.is_string()) p.fail("#meta value for '" + key + "' must be a string");
        ds.metadata[key] = value.get<std::string>();
      }
      continue;
    }
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      p.fail(std::string("malformed JSON: ") + e.what());
    }
    ds.instances.push_back(p.instance(j));
  }
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot open dataset for writing: " + path.string());
  const std::string text = serialize_dataset(dataset);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DatasetError("write failed: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open dataset: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str(), path.string());
}

std::vector<ScenePair> pair_scenes(const Dataset& dataset) {
  std::vector<ScenePair> pairs;
  const auto& xs = dataset.instances;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    if (xs[i].task == Task::kAnswer && xs[i + 1].task == Task::kRationale && same_scene(xs[i], xs[i + 1])) {
      pairs.push_back({i, i + 1});
      ++i;
    }
  }
  return pairs;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw DatasetError("split fraction must lie in [0, 1]");
  // Group consecutive instances that share a scene.
  std::vector<std::size_t> group_start;
  const auto& xs = dataset.instances;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i == 0 || !same_scene(xs[i - 1], xs[i])) group_start.push_back(i);
  }
  const auto groups = group_start.size();
  const auto head_groups = static_cast<std::size_t>(std::llround(static_cast<double>(groups) * fraction));
  const std::size_t cut = head_groups < groups ? group_start[head_groups] : xs.size();

  std::pair<Dataset, Dataset> out;
  out.first.metadata = dataset.metadata;
  out.second.metadata = dataset.metadata;
  out.first.instances.assign(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(cut));
  out.second.instances.assign(xs.begin() + static_cast<std::ptrdiff_t>(cut), xs.end());
  return out;
}

Dataset filter_task(const Dataset& dataset, Task task) {
  Dataset out;
  out.metadata = dataset.metadata;
  for (const auto& inst : dataset.instances)
    if (inst.task == task) out.instances.push_back(inst);
  return out;
}

}  // namespace hgl
