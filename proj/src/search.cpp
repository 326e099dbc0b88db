#include "pixle/search.hpp"

#include <algorithm>
#include <string>

namespace pixle {

namespace {

/// Wraps the oracle so every interrogation lands in the trajectory and a
/// failure reports how many queries had completed.
class QueryLog {
 public:
  QueryLog(Oracle& oracle, const AttackGoal& goal) : oracle_(oracle), goal_(goal) {}

  ProbVector query(const ImageTensor& image) {
    ProbVector probs;
    try {
      probs = oracle_.query(image);
    } catch (const std::exception& e) {
      throw AttackAborted(std::string("oracle failed: ") + e.what(), trajectory_.size());
    }
    if (probs.size() != oracle_.num_classes()) {
      throw AttackAborted("oracle returned " + std::to_string(probs.size()) + " probabilities",
                          trajectory_.size());
    }
    trajectory_.push_back({trajectory_.size() + 1, goal_loss(probs, goal_)});
    return probs;
  }

  double last_loss() const { return trajectory_.back().loss; }
  std::vector<TrajectoryPoint>& trajectory() { return trajectory_; }

 private:
  Oracle& oracle_;
  const AttackGoal& goal_;
  std::vector<TrajectoryPoint> trajectory_;
};

AttackOutcome finish(const ImageTensor& original, ImageTensor adversarial, bool success,
                     double loss, std::size_t moves, QueryLog& log) {
  AttackOutcome out;
  out.success = success;
  out.l0 = l0_pixel_distance(original, adversarial);
  out.adversarial = std::move(adversarial);
  out.trajectory = std::move(log.trajectory());
  out.queries = out.trajectory.size();
  out.final_loss = loss;
  out.applied_moves = moves;
  return out;
}

void check_inputs(const ImageTensor& image, const AttackGoal& goal, const Oracle& oracle,
                  const AttackConfig& config) {
  config.validate();
  goal.validate(oracle.num_classes());
  if (config.patch_max > std::min(image.height(), image.width())) {
    throw ConfigError("patch_max " + std::to_string(config.patch_max) + " exceeds the image side");
  }
}

}  // namespace

void AttackGoal::validate(std::size_t num_classes) const {
  if (true_label >= num_classes) {
    throw ConfigError("label " + std::to_string(true_label) + " is not a valid class");
  }
  if (target) {
    if (*target >= num_classes) throw ConfigError("target " + std::to_string(*target) + " is not a valid class");
    if (*target == true_label) throw ConfigError("target class must differ from the true label");
  }
}

const char* to_string(SearchAlgorithm algorithm) noexcept {
  return algorithm == SearchAlgorithm::RestartIterative ? "restart" : "iterative";
}

SearchAlgorithm parse_search_algorithm(std::string_view name) {
  if (name == "restart") return SearchAlgorithm::RestartIterative;
  if (name == "iterative") return SearchAlgorithm::Iterative;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

std::size_t AttackConfig::query_budget() const noexcept {
  return algorithm == SearchAlgorithm::RestartIterative ? 1 + restarts * iterations : 1 + iterations;
}

void AttackConfig::validate() const {
  if (patch_min == 0) throw ConfigError("patch_min must be at least 1");
  if (patch_min > patch_max) throw ConfigError("patch_min exceeds patch_max");
}

double untargeted_loss(const ProbVector& probs, std::size_t true_label) {
  if (true_label >= probs.size()) throw ConfigError("invalid class index");
  return probs[true_label];
}

double targeted_loss(const ProbVector& probs, std::size_t target) {
  if (target >= probs.size()) throw ConfigError("invalid class index");
  return 1.0 - probs[target];
}

double goal_loss(const ProbVector& probs, const AttackGoal& goal) {
  return goal.target ? targeted_loss(probs, *goal.target) : untargeted_loss(probs, goal.true_label);
}

std::size_t argmax(const ProbVector& probs) {
  return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

bool goal_met(const ProbVector& probs, const AttackGoal& goal) {
  const std::size_t predicted = argmax(probs);
  return goal.target ? predicted == *goal.target : predicted != goal.true_label;
}

Patch sample_patch(Rng& rng, const Shape& shape, std::size_t patch_min, std::size_t patch_max) {
  if (patch_min == 0 || patch_min > patch_max) throw ConfigError("invalid patch size range");
  if (patch_max > std::min(shape.height, shape.width)) {
    throw ConfigError("patch_max " + std::to_string(patch_max) + " exceeds the image side");
  }
  std::uniform_int_distribution<std::size_t> side(patch_min, patch_max);
  std::uniform_int_distribution<std::size_t> column(0, shape.width - 1);
  std::uniform_int_distribution<std::size_t> row(0, shape.height - 1);
  Patch p;
  p.width = side(rng);
  p.height = side(rng);
  p.origin_x = column(rng);
  p.origin_y = row(rng);
  return p;
}

ImageTensor propose_candidate(const ImageTensor& base, const AttackConfig& config, Rng& rng) {
  const Patch patch = sample_patch(rng, base.shape(), config.patch_min, config.patch_max);
  const auto sources = build_patch_indices(patch, base.height(), base.width());
  std::vector<PixelCoord> kept;
  std::vector<PixelCoord> destinations;
  kept.reserve(sources.size());
  destinations.reserve(sources.size());
  for (const auto& src : sources) {
    try {
      destinations.push_back(map_pixel(config.mapping, src, base, rng));
      kept.push_back(src);
    } catch (const NoValidDestination&) {
      // Every other pixel equals this one, so it stays where it is.
    }
  }
  return apply_mapping(base, kept, destinations, config.transfer);
}

AttackOutcome restart_iterative_attack(const ImageTensor& image, const AttackGoal& goal,
                                       Oracle& oracle, const AttackConfig& config, Rng& rng) {
  check_inputs(image, goal, oracle, config);
  QueryLog log(oracle, goal);

  ProbVector best_probs = log.query(image);
  double best_loss = log.last_loss();
  if (config.early_stop && goal_met(best_probs, goal)) {
    return finish(image, image, true, best_loss, 0, log);
  }

  ImageTensor current = image;
  std::size_t moves = 0;
  for (std::size_t r = 0; r < config.restarts; ++r) {
    std::optional<ImageTensor> restart_best;
    for (std::size_t t = 0; t < config.iterations; ++t) {
      // Every candidate of a restart starts from the restart-entry image.
      ImageTensor candidate = propose_candidate(current, config, rng);
      ProbVector probs = log.query(candidate);
      const double loss = log.last_loss();
      if (config.early_stop && goal_met(probs, goal)) {
        return finish(image, std::move(candidate), true, loss, moves + 1, log);
      }
      if (loss < best_loss) {
        best_loss = loss;
        best_probs = std::move(probs);
        restart_best = std::move(candidate);
      }
    }
    if (restart_best) {
      current = std::move(*restart_best);
      ++moves;
    }
  }
  return finish(image, std::move(current), goal_met(best_probs, goal), best_loss, moves, log);
}

AttackOutcome iterative_attack(const ImageTensor& image, const AttackGoal& goal, Oracle& oracle,
                               const AttackConfig& config, Rng& rng) {
  check_inputs(image, goal, oracle, config);
  QueryLog log(oracle, goal);

  ProbVector best_probs = log.query(image);
  double best_loss = log.last_loss();
  if (config.early_stop && goal_met(best_probs, goal)) {
    return finish(image, image, true, best_loss, 0, log);
  }

  ImageTensor current = image;
  std::size_t moves = 0;
  for (std::size_t t = 0; t < config.iterations; ++t) {
    ImageTensor candidate = propose_candidate(current, config, rng);
    ProbVector probs = log.query(candidate);
    const double loss = log.last_loss();
    if (config.early_stop && goal_met(probs, goal)) {
      return finish(image, std::move(candidate), true, loss, moves + 1, log);
    }
    if (loss < best_loss) {
      best_loss = loss;
      best_probs = std::move(probs);
      current = std::move(candidate);
      ++moves;
    }
  }
  return finish(image, std::move(current), goal_met(best_probs, goal), best_loss, moves, log);
}

AttackOutcome run_attack(const ImageTensor& image, const AttackGoal& goal, Oracle& oracle,
                         const AttackConfig& config) {
  Rng rng(config.seed);
  return config.algorithm == SearchAlgorithm::RestartIterative
             ? restart_iterative_attack(image, goal, oracle, config, rng)
             : iterative_attack(image, goal, oracle, config, rng);
}

}  // namespace pixle
