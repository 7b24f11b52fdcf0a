#include "hgl/instance.hpp"

namespace hgl {

std::string_view to_string(Task task) { return task == Task::kAnswer ? "answer" : "rationale"; }

Task parse_task(std::string_view text) {
  if (text == "answer") return Task::kAnswer;
  if (text == "rationale") return Task::kRationale;
  throw InstanceError("unknown task '" + std::string(text) + "' (expected answer|rationale)");
}

void validate_instance(const Instance& instance, std::size_t vocab_size) {
  const Tensor& scene = instance.scene;
  if (scene.rank() != 2 || scene.empty()) throw InstanceError("scene must be a non-empty P x C grid");
  if (instance.boxes.empty()) throw InstanceError("instance has no objects");
  for (std::size_t k = 0; k < instance.boxes.size(); ++k) {
    if (instance.boxes[k].empty()) throw InstanceError("object " + std::to_string(k) + " has an empty box");
    for (auto cell : instance.boxes[k]) {
      if (cell >= scene.rows()) {
        throw InstanceError("object " + std::to_string(k) + " references cell " + std::to_string(cell) +
                            " outside a grid of " + std::to_string(scene.rows()));
      }
    }
  }
  if (instance.question.empty()) throw InstanceError("empty question");
  if (instance.gold >= kNumCandidates) throw InstanceError("gold index " + std::to_string(instance.gold) + " out of range");
  auto check_tokens = [vocab_size](const TokenSequence& seq, const char* what) {
    if (seq.empty()) throw InstanceError(std::string("empty ") + what);
    if (vocab_size == 0) return;
    for (auto t : seq) {
      if (t >= vocab_size) {
        throw InstanceError(std::string(what) + " token " + std::to_string(t) + " outside vocabulary of " +
                            std::to_string(vocab_size));
      }
    }
  };
  check_tokens(instance.question, "question");
  for (const auto& c : instance.candidates) check_tokens(c, "candidate");
}

}  // namespace hgl
