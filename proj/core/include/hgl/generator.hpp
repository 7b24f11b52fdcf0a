#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hgl/config_file.hpp"
#include "hgl/dataset.hpp"

namespace hgl {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How the three wrong candidates are built. Content is a (type, attribute)
/// pair; for rationale problems the attribute is the object's grid row.
///   kLexicalOverlap: asked type + an attribute absent from the scene
///   kAttributeSwap:  another scene type + an attribute present in the scene
///   kRandom:         any (type, attribute) pair other than the gold one
///   kMixed:          two lexical-overlap distractors and one attribute-swap
enum class DistractorStrategy { kMixed, kLexicalOverlap, kAttributeSwap, kRandom };

std::string_view to_string(DistractorStrategy s);
DistractorStrategy parse_distractor_strategy(std::string_view text);

inline constexpr std::string_view kGeneratorVersion = "hgl-synth/1";

struct GeneratorConfig {
  std::uint64_t seed = 7;
  std::size_t instances = 1000;  // problems; even, since each scene yields an answer and a rationale problem
  double split = 0.8;            // fraction of scenes in the training file
  std::size_t grid_rows = 6;
  std::size_t grid_cols = 6;
  std::size_t channels = 20;
  std::size_t object_types = 6;
  std::size_t attributes = 6;
  std::size_t objects_min = 2;
  std::size_t objects_max = 3;
  std::size_t question_length_min = 2;
  std::size_t question_length_max = 4;
  std::size_t answer_length_min = 2;
  std::size_t answer_length_max = 3;
  std::size_t vocab_size = 32;
  DistractorStrategy distractors = DistractorStrategy::kMixed;
  double noise = 0.05;  // std of additive noise, quantised to 1/32

  static GeneratorConfig from_config(const ConfigMap& cfg);
  std::map<std::string, std::string> to_map() const;
  /// Throws GenerationError when no scene can satisfy the settings.
  void validate() const;

  std::size_t positions() const { return grid_rows * grid_cols; }
};

/// Token ids: two question words, then types, attributes, rows, fillers.
struct Vocabulary {
  enum class Kind { kAskWhat, kAskWhy, kType, kAttribute, kRow, kFiller };

  std::size_t types = 0;
  std::size_t attributes = 0;
  std::size_t rows = 0;
  std::size_t size = 0;

  static Vocabulary from(const GeneratorConfig& cfg);

  static constexpr std::size_t kWhat = 0;
  static constexpr std::size_t kWhy = 1;
  std::size_t type(std::size_t t) const { return 2 + t; }
  std::size_t attribute(std::size_t a) const { return 2 + types + a; }
  std::size_t row(std::size_t r) const { return 2 + types + attributes + r; }
  std::size_t first_filler() const { return 2 + types + attributes + rows; }
  Kind kind(std::size_t token) const;
  /// Human-readable token name (`what`, `type3`, `attr1`, `row2`, `w17`).
  std::string name(std::size_t token) const;
};

/// Channel layout of a rendered grid cell.
struct ChannelLayout {
  std::size_t types = 0;
  std::size_t attributes = 0;
  std::size_t rows = 0;

  static ChannelLayout from(const GeneratorConfig& cfg);
  static constexpr std::size_t kObjectness = 0;
  static constexpr std::size_t kMarker = 1;
  std::size_t type(std::size_t t) const { return 2 + t; }
  std::size_t attribute(std::size_t a) const { return 2 + types + a; }
  std::size_t row(std::size_t r) const { return 2 + types + attributes + r; }
  std::size_t used() const { return 2 + types + attributes + rows; }
};

/// Latent description of one scene object.
struct SceneObject {
  std::size_t type = 0;
  std::size_t attribute = 0;
  std::size_t row = 0;
  std::vector<std::size_t> box;
  std::size_t marker = 0;  // cell rendering the attribute, next to the box

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

Dataset generate(const GeneratorConfig& config);

/// Recovers the scene graph from a rendered grid (argmax decoding).
std::vector<SceneObject> decode_scene(const Instance& instance, const GeneratorConfig& config);

/// Content (type, attribute-or-row) of a candidate, ignoring fillers.
struct CandidateContent {
  std::size_t type = 0;
  std::size_t value = 0;
  friend bool operator==(const CandidateContent&, const CandidateContent&) = default;
};
std::optional<CandidateContent> candidate_content(const TokenSequence& seq, const Vocabulary& vocab, Task task);

/// Index of the single candidate consistent with the decoded scene and the
/// question, or nullopt if zero or several are consistent.
std::optional<std::size_t> symbolic_answer(const Instance& instance, const GeneratorConfig& config);

/// Candidate sharing the most distinct tokens with the question; ties go to
/// the lowest index. Never looks at the scene.
std::size_t lexical_overlap_choice(const Instance& instance);

/// Reads the generator settings echoed into dataset metadata.
GeneratorConfig generator_config_from_metadata(const std::map<std::string, std::string>& metadata);

}  // namespace hgl
