#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "lsa/random.hpp"

namespace lsa {

using TargetId = int;

/// Flattened egocentric observation (see EnvConfig::observation_size for the layout).
using Observation = Eigen::VectorXd;

namespace env {

enum class Difficulty { Normal, Hard };
enum class Action : int { TurnLeft = 0, TurnRight = 1, GoStraight = 2 };
enum class Heading : int { N = 0, E = 1, S = 2, W = 3 };
enum class Result { Ongoing, Success, WrongTarget, Timeout };

inline constexpr int kNumActions = 3;

std::string_view to_string(Difficulty d) noexcept;
std::string_view to_string(Result r) noexcept;
std::optional<Difficulty> parse_difficulty(std::string_view s) noexcept;

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

inline int chebyshev(Cell a, Cell b) noexcept {
  const int dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  const int dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx > dy ? dx : dy;
}

struct Rewards {
  double success = 10.0;
  double wrong_target = -1.0;
  double timeout = -0.1;
  double per_step = -0.01;
};

struct EnvConfig {
  int grid_size = 15;
  /// One tag per target; the number of targets is difficulty.size().
  std::vector<Difficulty> difficulty{Difficulty::Normal, Difficulty::Normal, Difficulty::Hard,
                                     Difficulty::Hard};
  int hard_min_dist = 6;
  int time_limit = 30;
  int window_radius = 2;
  Rewards rewards{};

  int num_targets() const noexcept { return static_cast<int>(difficulty.size()); }
  Cell start() const noexcept { return {grid_size / 2, grid_size / 2}; }

  /// (2r+1)^2 window cells x (N+1) channels, followed by a 4-way heading one-hot.
  /// Cell (row, col) of the window, row 0 being farthest ahead, occupies
  /// indices [(row*(2r+1)+col)*(N+1), ... + N]; channel N marks out-of-bounds.
  int observation_size() const noexcept;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

struct EpisodeState {
  Cell agent{};
  Heading heading = Heading::N;
  std::vector<Cell> targets;
  TargetId instruction = 0;
  int step_count = 0;
  bool terminal = false;
  std::uint64_t seed = 0;

  friend bool operator==(const EpisodeState&, const EpisodeState&) = default;
};

struct StepOutcome {
  Observation observation;
  double reward = 0.0;
  bool terminal = false;
  Result result = Result::Ongoing;
};

/// Deterministic multi-target gridworld. Stateless apart from the config; all
/// episode state lives in EpisodeState so one Environment can serve many episodes.
class Environment {
 public:
  explicit Environment(EnvConfig config);

  const EnvConfig& config() const noexcept { return config_; }

  /// Agent at the grid center facing N; targets placed uniformly subject to the
  /// difficulty constraints. Same (config, seed, instruction) gives the same state.
  EpisodeState reset(std::uint64_t seed, TargetId instruction) const;

  StepOutcome step(EpisodeState& state, Action action) const;

  Observation observe(const EpisodeState& state) const;
  void observe_into(const EpisodeState& state, Eigen::Ref<Eigen::VectorXd> out) const;

 private:
  EnvConfig config_;
  std::vector<Cell> hard_cells_;
  std::vector<Cell> normal_cells_;
};

Cell heading_delta(Heading h) noexcept;
Heading turn_left(Heading h) noexcept;
Heading turn_right(Heading h) noexcept;

/// Policy interface used by Monte-Carlo estimators and evaluation harnesses.
using Policy = std::function<Action(const EpisodeState&, const Observation&, Rng&)>;

Action random_action(Rng& rng);

/// Shortest path over (cell, heading) that avoids non-instructed targets; returns
/// the first action of that path, or GoStraight if the target is unreachable.
Action oracle_action(const EnvConfig& config, const EpisodeState& state);

/// Success frequency of `policy` on `episodes` episodes instructed with `target`.
double success_rate(const Environment& env, TargetId target, int episodes, std::uint64_t seed,
                    const Policy& policy);

/// Monte-Carlo success frequency of the uniform-random policy.
double random_success_estimate(const EnvConfig& config, TargetId target, int episodes,
                               std::uint64_t seed);

struct CalibrationPoint {
  int hard_min_dist = 0;
  double normal_rate = 0.0;
  double hard_rate = 0.0;
  double ratio() const noexcept;
};

struct CalibrationResult {
  std::vector<CalibrationPoint> sweep;
  std::optional<EnvConfig> calibrated;
};

/// Sweeps hard_min_dist upward from `config.hard_min_dist` (or 1 if `from_one`) until the
/// random agent's pooled Normal success rate is at least `min_ratio` times its pooled Hard
/// rate, with the Hard rate strictly positive. Each class is estimated over
/// `episodes_per_class` episodes split evenly over that class's targets.
CalibrationResult calibrate(const EnvConfig& config, int episodes_per_class, std::uint64_t seed,
                            double min_ratio = 10.0, bool from_one = true);

}  // namespace env
}  // namespace lsa
