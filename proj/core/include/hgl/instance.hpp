#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hgl/tensor.hpp"

namespace hgl {

inline constexpr std::size_t kNumCandidates = 4;

enum class Task { kAnswer, kRationale };

std::string_view to_string(Task task);
Task parse_task(std::string_view text);

using TokenSequence = std::vector<std::size_t>;

/// One four-way multiple-choice problem.
struct Instance {
  Tensor scene;                                     // [P x C] raw grid features
  std::vector<std::vector<std::size_t>> boxes;      // grid cells of each object
  TokenSequence question;
  std::array<TokenSequence, kNumCandidates> candidates;
  std::size_t gold = 0;
  Task task = Task::kAnswer;

  friend bool operator==(const Instance&, const Instance&) = default;
};

class InstanceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Checks the structural invariants (non-empty boxes and sequences, indices in
/// range, gold in 0..3). `vocab_size` = 0 skips the token-range check.
void validate_instance(const Instance& instance, std::size_t vocab_size = 0);

}  // namespace hgl
