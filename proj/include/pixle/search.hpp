#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "pixle/image.hpp"
#include "pixle/mapping.hpp"
#include "pixle/oracle.hpp"
#include "pixle/rng.hpp"

namespace pixle {

/// Untargeted: leave the true class. Targeted: reach `target`.
struct AttackGoal {
  std::size_t true_label = 0;
  std::optional<std::size_t> target;

  static AttackGoal untargeted(std::size_t label) { return {label, std::nullopt}; }
  static AttackGoal targeted(std::size_t label, std::size_t target) { return {label, target}; }
  bool is_targeted() const noexcept { return target.has_value(); }
  void validate(std::size_t num_classes) const;
};

enum class SearchAlgorithm { RestartIterative, Iterative };

const char* to_string(SearchAlgorithm algorithm) noexcept;
SearchAlgorithm parse_search_algorithm(std::string_view name);

struct AttackConfig {
  SearchAlgorithm algorithm = SearchAlgorithm::RestartIterative;
  std::size_t restarts = 100;
  std::size_t iterations = 50;
  std::size_t patch_min = 3;
  std::size_t patch_max = 3;
  MappingKind mapping = MappingKind::Random;
  TransferMode transfer = TransferMode::Overwrite;
  std::uint64_t seed = 0;
  bool early_stop = true;

  /// 1 + R*T for restart-iterative, 1 + T for iterative.
  std::size_t query_budget() const noexcept;
  void validate() const;
};

struct TrajectoryPoint {
  std::size_t query = 0;  // 1-based; query 1 is the clean image
  double loss = 0.0;
  friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

struct AttackOutcome {
  bool success = false;
  ImageTensor adversarial;
  std::size_t queries = 0;
  std::size_t l0 = 0;
  std::vector<TrajectoryPoint> trajectory;
  double final_loss = 0.0;
  /// Patch applications composing `adversarial`.
  std::size_t applied_moves = 0;

  friend bool operator==(const AttackOutcome&, const AttackOutcome&) = default;
};

double untargeted_loss(const ProbVector& probs, std::size_t true_label);
double targeted_loss(const ProbVector& probs, std::size_t target);
double goal_loss(const ProbVector& probs, const AttackGoal& goal);

/// Index of the largest probability; ties go to the smallest index.
std::size_t argmax(const ProbVector& probs);
bool goal_met(const ProbVector& probs, const AttackGoal& goal);

/// Draws width, height, origin x, origin y in that order. Clamping is left to
/// build_patch_indices.
Patch sample_patch(Rng& rng, const Shape& shape, std::size_t patch_min, std::size_t patch_max);

/// One candidate: `base` with one sampled patch moved by the configured mapping.
/// Source pixels without an admissible destination stay in place.
ImageTensor propose_candidate(const ImageTensor& base, const AttackConfig& config, Rng& rng);

AttackOutcome restart_iterative_attack(const ImageTensor& image, const AttackGoal& goal,
                                       Oracle& oracle, const AttackConfig& config, Rng& rng);
AttackOutcome iterative_attack(const ImageTensor& image, const AttackGoal& goal, Oracle& oracle,
                               const AttackConfig& config, Rng& rng);

/// Seeds a stream from config.seed and runs the configured algorithm.
AttackOutcome run_attack(const ImageTensor& image, const AttackGoal& goal, Oracle& oracle,
                         const AttackConfig& config);

}  // namespace pixle
