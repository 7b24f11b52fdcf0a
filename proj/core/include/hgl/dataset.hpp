#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hgl/instance.hpp"

namespace hgl {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered instances plus free-form string metadata (config echo, generator
/// version, seed). Answer and rationale problems about the same scene are
/// stored next to each other, answer first.
struct Dataset {
  std::vector<Instance> instances;
  std::map<std::string, std::string> metadata;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Line-delimited JSON. Line 1 is `#meta {...}`; every further line is one
/// instance object with exactly the fields scene, boxes, question, candidates,
/// gold and task.
std::string serialize_dataset(const Dataset& dataset);
Dataset parse_dataset(const std::string& text, const std::string& origin = "<dataset>");

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// Adjacent (answer, rationale) instances that share a scene.
struct ScenePair {
  std::size_t answer;
  std::size_t rationale;
};
std::vector<ScenePair> pair_scenes(const Dataset& dataset);

/// Splits at a scene boundary: the first round(scenes * fraction) scenes go to
/// the first dataset. Metadata is copied to both halves.
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double fraction);

/// Instances of one task, order preserved.
Dataset filter_task(const Dataset& dataset, Task task);

}  // namespace hgl
