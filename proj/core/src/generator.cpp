#include "hgl/generator.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <set>

#include "hgl/rng.hpp"

namespace hgl {
namespace {

constexpr std::size_t kBlock = kNumCandidates * kNumCandidates;  // scenes per balanced gold-position block

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// Latent scene plus the sampling state needed to write its problems.
struct Scene {
  std::vector<SceneObject> objects;
  Tensor grid;
};

Scene sample_scene(const GeneratorConfig& cfg, const ChannelLayout& layout, Rng& rng) {
  Scene s;
  const std::size_t n = rng.between(cfg.objects_min, cfg.objects_max);
  std::vector<std::size_t> types(cfg.object_types), attrs(cfg.attributes), rows(cfg.grid_rows);
  for (std::size_t i = 0; i < types.size(); ++i) types[i] = i;
  for (std::size_t i = 0; i < attrs.size(); ++i) attrs[i] = i;
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  rng.shuffle(std::span(types));
  rng.shuffle(std::span(attrs));
  rng.shuffle(std::span(rows));

  for (std::size_t k = 0; k < n; ++k) {
    SceneObject obj;
    obj.type = types[k];
    obj.attribute = attrs[k];
    obj.row = rows[k];
    const std::size_t width = rng.between(1, 2);
    const std::size_t start = rng.between(0, cfg.grid_cols - width);
    std::vector<std::size_t> sides;
    if (start > 0) sides.push_back(start - 1);
    if (start + width < cfg.grid_cols) sides.push_back(start + width);
    const std::size_t marker_col = sides[rng.index(sides.size())];
    for (std::size_t c = start; c < start + width; ++c) obj.box.push_back(obj.row * cfg.grid_cols + c);
    obj.marker = obj.row * cfg.grid_cols + marker_col;
    s.objects.push_back(std::move(obj));
  }

  const std::size_t P = cfg.positions();
  std::vector<double> values(P * cfg.channels);
  for (auto& v : values) v = cfg.noise > 0 ? std::round(cfg.noise * rng.normal() * 32.0) / 32.0 : 0.0;
  Tensor grid({P, cfg.channels}, std::move(values));
  for (std::size_t p = 0; p < P; ++p) grid(p, layout.row(p / cfg.grid_cols)) += 1.0;
  for (const auto& obj : s.objects) {
    for (auto cell : obj.box) {
      grid(cell, ChannelLayout::kObjectness) += 1.0;
      grid(cell, layout.type(obj.type)) += 1.0;
    }
    grid(obj.marker, ChannelLayout::kMarker) += 1.0;
    grid(obj.marker, layout.attribute(obj.attribute)) += 1.0;
  }
  s.grid = std::move(grid);
  return s;
}

class ProblemWriter {
 public:
  ProblemWriter(const GeneratorConfig& cfg, const Vocabulary& vocab, Rng& rng) : cfg_(cfg), vocab_(vocab), rng_(rng) {}

  /// Content tokens followed by fillers up to a length drawn from [lo, hi].
  TokenSequence pad(TokenSequence content, std::size_t lo, std::size_t hi) {
    const std::size_t len = rng_.between(std::max(lo, content.size()), std::max(hi, content.size()));
    const std::size_t fillers = vocab_.size - vocab_.first_filler();
    while (content.size() < len) content.push_back(vocab_.first_filler() + rng_.index(fillers));
    return content;
  }

  TokenSequence candidate(std::size_t type, std::size_t value_token) {
    return pad({vocab_.type(type), value_token}, cfg_.answer_length_min, cfg_.answer_length_max);
  }

  /// Wrong (type, value) pairs. `values_present` are the value ids carried by
  /// scene objects, `value_space` the number of possible ids.
  std::vector<CandidateContent> distractors(const CandidateContent& gold, const std::vector<std::size_t>& scene_types,
                                            const std::vector<std::size_t>& values_present, std::size_t value_space) {
    std::vector<std::size_t> absent;
    for (std::size_t v = 0; v < value_space; ++v)
      if (std::find(values_present.begin(), values_present.end(), v) == values_present.end()) absent.push_back(v);
    std::vector<std::size_t> other_types;
    for (auto t : scene_types)
      if (t != gold.type) other_types.push_back(t);

    std::vector<CandidateContent> out;
    auto fresh = [&](const CandidateContent& c) {
      return !(c == gold) && std::find(out.begin(), out.end(), c) == out.end();
    };
    auto lexical = [&] {
      CandidateContent c;
      do c = {gold.type, absent[rng_.index(absent.size())]};
      while (!fresh(c));
      out.push_back(c);
    };
    auto swap = [&] {
      CandidateContent c;
      do c = {other_types[rng_.index(other_types.size())], values_present[rng_.index(values_present.size())]};
      while (!fresh(c));
      out.push_back(c);
    };
    auto random = [&] {
      CandidateContent c;
      do c = {rng_.index(cfg_.object_types), rng_.index(value_space)};
      while (!fresh(c));
      out.push_back(c);
    };
    switch (cfg_.distractors) {
      case DistractorStrategy::kMixed:
        lexical();
        lexical();
        swap();
        break;
      case DistractorStrategy::kLexicalOverlap:
        for (int i = 0; i < 3; ++i) lexical();
        break;
      case DistractorStrategy::kAttributeSwap:
        for (int i = 0; i < 3; ++i) swap();
        break;
      case DistractorStrategy::kRandom:
        for (int i = 0; i < 3; ++i) random();
        break;
    }
    rng_.shuffle(std::span(out));
    return out;
  }

  void place(Instance& inst, std::size_t gold_pos, const TokenSequence& gold_seq,
             const std::vector<CandidateContent>& wrong, bool rationale) {
    inst.gold = gold_pos;
    std::size_t next = 0;
    for (std::size_t k = 0; k < kNumCandidates; ++k) {
      if (k == gold_pos) {
        inst.candidates[k] = gold_seq;
      } else {
        const auto& c = wrong[next++];
        inst.candidates[k] = candidate(c.type, rationale ? vocab_.row(c.value) : vocab_.attribute(c.value));
      }
    }
  }

 private:
  const GeneratorConfig& cfg_;
  const Vocabulary& vocab_;
  Rng& rng_;
};

std::size_t argmax_channel(const Tensor& grid, const std::vector<std::size_t>& cells, std::size_t first,
                           std::size_t count) {
  std::size_t best = 0;
  double best_v = -INFINITY;
  for (std::size_t k = 0; k < count; ++k) {
    double v = 0.0;
    for (auto cell : cells) v += grid(cell, first + k);
    if (v > best_v) {
      best_v = v;
      best = k;
    }
  }
  return best;
}

}  // namespace

std::string_view to_string(DistractorStrategy s) {
  switch (s) {
    case DistractorStrategy::kMixed: return "mixed";
    case DistractorStrategy::kLexicalOverlap: return "lexical-overlap";
    case DistractorStrategy::kAttributeSwap: return "attribute-swap";
    case DistractorStrategy::kRandom: return "random";
  }
  return "?";
}

DistractorStrategy parse_distractor_strategy(std::string_view text) {
  if (text == "mixed") return DistractorStrategy::kMixed;
  if (text == "lexical-overlap") return DistractorStrategy::kLexicalOverlap;
  if (text == "attribute-swap") return DistractorStrategy::kAttributeSwap;
  if (text == "random") return DistractorStrategy::kRandom;
  throw GenerationError("unknown distractor strategy '" + std::string(text) +
                        "' (expected mixed|lexical-overlap|attribute-swap|random)");
}

GeneratorConfig GeneratorConfig::from_config(const ConfigMap& cfg) {
  GeneratorConfig g;
  cfg.reject_unknown({"seed", "instances", "split", "grid_rows", "grid_cols", "channels", "object_types", "attributes",
                      "objects_min", "objects_max", "question_length_min", "question_length_max", "answer_length_min",
                      "answer_length_max", "vocab_size", "distractors", "noise"});
  g.seed = cfg.get_u64("seed", g.seed);
  g.instances = cfg.get_size("instances", g.instances);
  g.split = cfg.get_double("split", g.split);
  g.grid_rows = cfg.get_size("grid_rows", g.grid_rows);
  g.grid_cols = cfg.get_size("grid_cols", g.grid_cols);
  g.channels = cfg.get_size("channels", g.channels);
  g.object_types = cfg.get_size("object_types", g.object_types);
  g.attributes = cfg.get_size("attributes", g.attributes);
  g.objects_min = cfg.get_size("objects_min", g.objects_min);
  g.objects_max = cfg.get_size("objects_max", g.objects_max);
  g.question_length_min = cfg.get_size("question_length_min", g.question_length_min);
  g.question_length_max = cfg.get_size("question_length_max", g.question_length_max);
  g.answer_length_min = cfg.get_size("answer_length_min", g.answer_length_min);
  g.answer_length_max = cfg.get_size("answer_length_max", g.answer_length_max);
  g.vocab_size = cfg.get_size("vocab_size", g.vocab_size);
  g.distractors = parse_distractor_strategy(cfg.get_string("distractors", std::string(to_string(g.distractors))));
  g.noise = cfg.get_double("noise", g.noise);
  return g;
}

std::map<std::string, std::string> GeneratorConfig::to_map() const {
  return {
      {"seed", std::to_string(seed)},
      {"instances", std::to_string(instances)},
      {"split", format_double(split)},
      {"grid_rows", std::to_string(grid_rows)},
      {"grid_cols", std::to_string(grid_cols)},
      {"channels", std::to_string(channels)},
      {"object_types", std::to_string(object_types)},
      {"attributes", std::to_string(attributes)},
      {"objects_min", std::to_string(objects_min)},
      {"objects_max", std::to_string(objects_max)},
      {"question_length_min", std::to_string(question_length_min)},
      {"question_length_max", std::to_string(question_length_max)},
      {"answer_length_min", std::to_string(answer_length_min)},
      {"answer_length_max", std::to_string(answer_length_max)},
      {"vocab_size", std::to_string(vocab_size)},
      {"distractors", std::string(to_string(distractors))},
      {"noise", format_double(noise)},
  };
}

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& why) { throw GenerationError("infeasible generator config: " + why); };
  if (instances % 2 != 0) fail("instances must be even (one answer and one rationale problem per scene)");
  if (!(split > 0.0 && split < 1.0)) fail("split must lie strictly between 0 and 1");
  if (!(noise >= 0.0) || !std::isfinite(noise)) fail("noise must be a finite non-negative number");
  if (grid_rows == 0) fail("grid_rows must be positive");
  if (grid_cols < 3) fail("grid_cols must be at least 3 so every box has room for its marker cell");
  if (object_types == 0 || attributes == 0) fail("object_types and attributes must be positive");
  if (objects_min == 0 || objects_min > objects_max) fail("objects range must be non-empty and start at 1 or more");
  if (objects_max > grid_rows) {
    fail("objects_max " + std::to_string(objects_max) + " exceeds the " + std::to_string(grid_rows) +
         " grid rows (one object per row)");
  }
  if (objects_max > object_types) fail("objects_max exceeds object_types (types are unique per scene)");
  if (objects_max > attributes) fail("objects_max exceeds attributes (attributes are unique per scene)");
  const ChannelLayout layout = ChannelLayout::from(*this);
  if (channels < layout.used()) {
    fail("channels " + std::to_string(channels) + " below the " + std::to_string(layout.used()) + " the layout needs");
  }
  if (question_length_min < 2 || question_length_min > question_length_max) fail("question length range must start at 2 or more");
  if (answer_length_min < 2 || answer_length_min > answer_length_max) fail("answer length range must start at 2 or more");
  const Vocabulary vocab = Vocabulary::from(*this);
  if (vocab_size < vocab.first_filler()) {
    fail("vocab_size " + std::to_string(vocab_size) + " below the " + std::to_string(vocab.first_filler()) +
         " content tokens");
  }
  const bool needs_fillers = question_length_max > 2 || answer_length_max > 2;
  if (needs_fillers && vocab_size == vocab.first_filler()) fail("lengths above 2 need at least one filler token");

  const std::size_t value_min = std::min(attributes, grid_rows);  // answer values are attributes, rationale values rows
  switch (distractors) {
    case DistractorStrategy::kMixed:
      if (objects_min < 2) fail("mixed distractors need objects_min >= 2");
      if (value_min < objects_max + 2) fail("mixed distractors need two absent attributes and rows");
      break;
    case DistractorStrategy::kLexicalOverlap:
      if (value_min < objects_max + 3) fail("lexical-overlap distractors need three absent attributes and rows");
      break;
    case DistractorStrategy::kAttributeSwap:
      if (objects_min < 3) fail("attribute-swap distractors need objects_min >= 3");
      break;
    case DistractorStrategy::kRandom:
      if (object_types * value_min < kNumCandidates) fail("random distractors need at least four distinct pairs");
      break;
  }
}

Vocabulary Vocabulary::from(const GeneratorConfig& cfg) {
  return {cfg.object_types, cfg.attributes, cfg.grid_rows, cfg.vocab_size};
}

Vocabulary::Kind Vocabulary::kind(std::size_t token) const {
  if (token == kWhat) return Kind::kAskWhat;
  if (token == kWhy) return Kind::kAskWhy;
  if (token < 2 + types) return Kind::kType;
  if (token < 2 + types + attributes) return Kind::kAttribute;
  if (token < first_filler()) return Kind::kRow;
  return Kind::kFiller;
}

std::string Vocabulary::name(std::size_t token) const {
  switch (kind(token)) {
    case Kind::kAskWhat: return "what";
    case Kind::kAskWhy: return "why";
    case Kind::kType: return "type" + std::to_string(token - 2);
    case Kind::kAttribute: return "attr" + std::to_string(token - 2 - types);
    case Kind::kRow: return "row" + std::to_string(token - 2 - types - attributes);
    case Kind::kFiller: return "w" + std::to_string(token);
  }
  return "?";
}

ChannelLayout ChannelLayout::from(const GeneratorConfig& cfg) { return {cfg.object_types, cfg.attributes, cfg.grid_rows}; }

Dataset generate(const GeneratorConfig& config) {
  config.validate();
  const Vocabulary vocab = Vocabulary::from(config);
  const ChannelLayout layout = ChannelLayout::from(config);
  Rng rng(config.seed);
  ProblemWriter writer(config, vocab, rng);

  Dataset ds;
  for (const auto& [k, v] : config.to_map()) ds.metadata["gen." + k] = v;
  ds.metadata["generator"] = std::string(kGeneratorVersion);
  ds.instances.reserve(config.instances);

  std::array<std::size_t, kBlock> block{};
  for (std::size_t s = 0; s < config.instances / 2; ++s) {
    if (s % kBlock == 0) {
      for (std::size_t i = 0; i < kBlock; ++i) block[i] = i;
      rng.shuffle(std::span<std::size_t>(block));
    }
    const std::size_t answer_pos = block[s % kBlock] / kNumCandidates;
    const std::size_t rationale_pos = block[s % kBlock] % kNumCandidates;

    Scene scene = sample_scene(config, layout, rng);
    std::vector<std::size_t> types, attrs, rows;
    for (const auto& o : scene.objects) {
      types.push_back(o.type);
      attrs.push_back(o.attribute);
      rows.push_back(o.row);
    }
    const SceneObject& target = scene.objects[rng.index(scene.objects.size())];

    Instance answer;
    answer.scene = scene.grid;
    for (const auto& o : scene.objects) answer.boxes.push_back(o.box);
    answer.task = Task::kAnswer;
    answer.question =
        writer.pad({Vocabulary::kWhat, vocab.type(target.type)}, config.question_length_min, config.question_length_max);
    const TokenSequence gold_answer = writer.candidate(target.type, vocab.attribute(target.attribute));
    writer.place(answer, answer_pos, gold_answer,
                 writer.distractors({target.type, target.attribute}, types, attrs, config.attributes), false);

    Instance rationale;
    rationale.scene = answer.scene;
    rationale.boxes = answer.boxes;
    rationale.task = Task::kRationale;
    rationale.question =
        writer.pad({Vocabulary::kWhy, vocab.type(target.type)}, config.question_length_min, config.question_length_max);
    rationale.question.insert(rationale.question.end(), gold_answer.begin(), gold_answer.end());
    const TokenSequence gold_rationale = writer.candidate(target.type, vocab.row(target.row));
    writer.place(rationale, rationale_pos, gold_rationale,
                 writer.distractors({target.type, target.row}, types, rows, config.grid_rows), true);

    ds.instances.push_back(std::move(answer));
    ds.instances.push_back(std::move(rationale));
  }
  return ds;
}

std::vector<SceneObject> decode_scene(const Instance& instance, const GeneratorConfig& config) {
  const ChannelLayout layout = ChannelLayout::from(config);
  const Tensor& grid = instance.scene;
  if (grid.rows() != config.positions() || grid.cols() != config.channels) {
    throw GenerationError("scene shape " + shape_to_string(grid.shape()) + " does not match the generator layout");
  }
  std::set<std::size_t> occupied;
  for (const auto& box : instance.boxes) occupied.insert(box.begin(), box.end());

  std::vector<SceneObject> objects;
  for (const auto& box : instance.boxes) {
    SceneObject obj;
    obj.box = box;
    obj.type = argmax_channel(grid, box, layout.type(0), layout.types);
    obj.row = argmax_channel(grid, box, layout.row(0), layout.rows);
    double best = -INFINITY;
    for (std::size_t c = 0; c < config.grid_cols; ++c) {
      const std::size_t cell = obj.row * config.grid_cols + c;
      if (occupied.count(cell)) continue;
      if (grid(cell, ChannelLayout::kMarker) > best) {
        best = grid(cell, ChannelLayout::kMarker);
        obj.marker = cell;
      }
    }
    obj.attribute = argmax_channel(grid, {obj.marker}, layout.attribute(0), layout.attributes);
    objects.push_back(std::move(obj));
  }
  return objects;
}

std::optional<CandidateContent> candidate_content(const TokenSequence& seq, const Vocabulary& vocab, Task task) {
  std::optional<std::size_t> type, value;
  const auto want = task == Task::kAnswer ? Vocabulary::Kind::kAttribute : Vocabulary::Kind::kRow;
  for (auto t : seq) {
    const auto k = vocab.kind(t);
    if (k == Vocabulary::Kind::kType && !type) type = t - vocab.type(0);
    if (k == want && !value) value = t - (task == Task::kAnswer ? vocab.attribute(0) : vocab.row(0));
  }
  if (!type || !value) return std::nullopt;
  return CandidateContent{*type, *value};
}

std::optional<std::size_t> symbolic_answer(const Instance& instance, const GeneratorConfig& config) {
  const Vocabulary vocab = Vocabulary::from(config);
  const auto objects = decode_scene(instance, config);
  std::optional<std::size_t> asked;
  for (auto t : instance.question) {
    if (vocab.kind(t) == Vocabulary::Kind::kType) {
      asked = t - vocab.type(0);
      break;
    }
  }
  if (!asked) return std::nullopt;
  auto it = std::find_if(objects.begin(), objects.end(), [&](const SceneObject& o) { return o.type == *asked; });
  if (it == objects.end()) return std::nullopt;
  const std::size_t expected = instance.task == Task::kAnswer ? it->attribute : it->row;

  std::optional<std::size_t> found;
  for (std::size_t k = 0; k < kNumCandidates; ++k) {
    const auto c = candidate_content(instance.candidates[k], vocab, instance.task);
    if (c && c->type == *asked && c->value == expected) {
      if (found) return std::nullopt;
      found = k;
    }
  }
  return found;
}

std::size_t lexical_overlap_choice(const Instance& instance) {
  const std::set<std::size_t> question(instance.question.begin(), instance.question.end());
  std::size_t best = 0, best_overlap = 0;
  for (std::size_t k = 0; k < kNumCandidates; ++k) {
    const std::set<std::size_t> cand(instance.candidates[k].begin(), instance.candidates[k].end());
    std::size_t overlap = 0;
    for (auto t : cand) overlap += question.count(t);
    if (k == 0 || overlap > best_overlap) {
      best = k;
      best_overlap = overlap;
    }
  }
  return best;
}

GeneratorConfig generator_config_from_metadata(const std::map<std::string, std::string>& metadata) {
  ConfigMap cfg;
  for (const auto& [k, v] : metadata)
    if (k.rfind("gen.", 0) == 0) cfg.set(k.substr(4), v);
  return GeneratorConfig::from_config(cfg);
}

}  // namespace hgl
