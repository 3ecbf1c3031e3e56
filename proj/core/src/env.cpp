#include "lsa/env.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "lsa/error.hpp"

namespace lsa::env {

namespace {

constexpr int kMaxPlacementAttempts = 10'000;

bool in_bounds(const EnvConfig& c, Cell p) noexcept {
  return p.x >= 0 && p.y >= 0 && p.x < c.grid_size && p.y < c.grid_size;
}

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError("env." + field + ": " + what);
}

}  // namespace

std::string_view to_string(Difficulty d) noexcept {
  return d == Difficulty::Hard ? "hard" : "normal";
}

std::string_view to_string(Result r) noexcept {
  switch (r) {
    case Result::Ongoing: return "ongoing";
    case Result::Success: return "success";
    case Result::WrongTarget: return "wrong_target";
    case Result::Timeout: return "timeout";
  }
  return "?";
}

std::optional<Difficulty> parse_difficulty(std::string_view s) noexcept {
  if (s == "normal" || s == "Normal" || s == "N") return Difficulty::Normal;
  if (s == "hard" || s == "Hard" || s == "H") return Difficulty::Hard;
  return std::nullopt;
}

Cell heading_delta(Heading h) noexcept {
  switch (h) {
    case Heading::N: return {0, -1};
    case Heading::E: return {1, 0};
    case Heading::S: return {0, 1};
    case Heading::W: return {-1, 0};
  }
  return {0, 0};
}

Heading turn_left(Heading h) noexcept {
  return static_cast<Heading>((static_cast<int>(h) + 3) % 4);
}

Heading turn_right(Heading h) noexcept {
  return static_cast<Heading>((static_cast<int>(h) + 1) % 4);
}

int EnvConfig::observation_size() const noexcept {
  const int side = 2 * window_radius + 1;
  return side * side * (num_targets() + 1) + 4;
}

void EnvConfig::validate() const {
  require(num_targets() >= 2, "difficulty", "at least 2 targets are required");
  require(hard_min_dist >= 1, "hard_min_dist", "must be >= 1");
  require(grid_size >= 2 * hard_min_dist + 1, "grid_size",
          "must be >= 2*hard_min_dist+1 (" + std::to_string(2 * hard_min_dist + 1) +
              ") so that Hard spawn cells exist");
  require(time_limit >= 1, "time_limit", "must be >= 1");
  require(window_radius >= 0, "window_radius", "must be >= 0");
  require(num_targets() < grid_size * grid_size, "difficulty", "more targets than free cells");
  require(std::isfinite(rewards.success), "rewards.success", "must be finite");
  require(std::isfinite(rewards.wrong_target), "rewards.wrong_target", "must be finite");
  require(std::isfinite(rewards.timeout), "rewards.timeout", "must be finite");
  require(std::isfinite(rewards.per_step), "rewards.per_step", "must be finite");
}

Environment::Environment(EnvConfig config) : config_(std::move(config)) {
  config_.validate();
  const Cell s = config_.start();
  for (int y = 0; y < config_.grid_size; ++y) {
    for (int x = 0; x < config_.grid_size; ++x) {
      const Cell c{x, y};
      if (c == s) continue;
      normal_cells_.push_back(c);
      if (chebyshev(s, c) >= config_.hard_min_dist) hard_cells_.push_back(c);
    }
  }
}

EpisodeState Environment::reset(std::uint64_t seed, TargetId instruction) const {
  if (instruction < 0 || instruction >= config_.num_targets()) {
    throw UsageError("reset: instruction " + std::to_string(instruction) + " out of range");
  }
  EpisodeState st;
  st.agent = config_.start();
  st.heading = Heading::N;
  st.instruction = instruction;
  st.seed = seed;
  st.targets.reserve(config_.difficulty.size());

  Rng rng(seed);
  int attempts = 0;
  for (Difficulty d : config_.difficulty) {
    const auto& pool = d == Difficulty::Hard ? hard_cells_ : normal_cells_;
    while (true) {
      if (++attempts > kMaxPlacementAttempts) {
        throw ConfigError("env: could not place distinct targets within " +
                          std::to_string(kMaxPlacementAttempts) + " attempts");
      }
      const Cell c = pool[uniform_index(rng, pool.size())];
      bool clash = false;
      for (const Cell& t : st.targets) clash = clash || t == c;
      if (!clash) {
        st.targets.push_back(c);
        break;
      }
    }
  }
  return st;
}

void Environment::observe_into(const EpisodeState& st, Eigen::Ref<Eigen::VectorXd> out) const {
  const int r = config_.window_radius;
  const int side = 2 * r + 1;
  const int channels = config_.num_targets() + 1;
  out.setZero();
  const Cell fwd = heading_delta(st.heading);
  const Cell rgt = heading_delta(turn_right(st.heading));

  for (int row = 0; row < side; ++row) {
    const int a = r - row;
    for (int col = 0; col < side; ++col) {
      const int b = col - r;
      const Cell w{st.agent.x + a * fwd.x + b * rgt.x, st.agent.y + a * fwd.y + b * rgt.y};
      if (!in_bounds(config_, w)) out[(row * side + col) * channels + channels - 1] = 1.0;
    }
  }
  for (int k = 0; k < config_.num_targets(); ++k) {
    const int dx = st.targets[k].x - st.agent.x;
    const int dy = st.targets[k].y - st.agent.y;
    const int a = dx * fwd.x + dy * fwd.y;
    const int b = dx * rgt.x + dy * rgt.y;
    if (a < -r || a > r || b < -r || b > r) continue;
    out[((r - a) * side + (b + r)) * channels + k] = 1.0;
  }
  out[side * side * channels + static_cast<int>(st.heading)] = 1.0;
}

Observation Environment::observe(const EpisodeState& st) const {
  Observation obs(config_.observation_size());
  observe_into(st, obs);
  return obs;
}

StepOutcome Environment::step(EpisodeState& st, Action action) const {
  if (st.terminal) throw UsageError("step: episode already terminated");

  switch (action) {
    case Action::TurnLeft: st.heading = turn_left(st.heading); break;
    case Action::TurnRight: st.heading = turn_right(st.heading); break;
    case Action::GoStraight: {
      const Cell d = heading_delta(st.heading);
      const Cell next{st.agent.x + d.x, st.agent.y + d.y};
      if (in_bounds(config_, next)) st.agent = next;
      break;
    }
  }
  ++st.step_count;

  StepOutcome out;
  out.reward = config_.rewards.per_step;
  for (int k = 0; k < config_.num_targets(); ++k) {
    if (st.targets[k] != st.agent) continue;
    if (k == st.instruction) {
      out.result = Result::Success;
      out.reward += config_.rewards.success;
    } else {
      out.result = Result::WrongTarget;
      out.reward += config_.rewards.wrong_target;
    }
    break;
  }
  if (out.result == Result::Ongoing && st.step_count >= config_.time_limit) {
    out.result = Result::Timeout;
    out.reward += config_.rewards.timeout;
  }
  out.terminal = out.result != Result::Ongoing;
  st.terminal = out.terminal;
  out.observation = observe(st);
  return out;
}

Action random_action(Rng& rng) {
  return static_cast<Action>(uniform_index(rng, kNumActions));
}

Action oracle_action(const EnvConfig& config, const EpisodeState& st) {
  const int g = config.grid_size;
  const Cell goal = st.targets[st.instruction];
  auto blocked = [&](Cell c) {
    for (int k = 0; k < config.num_targets(); ++k) {
      if (k != st.instruction && st.targets[k] == c) return true;
    }
    return false;
  };
  auto index = [g](Cell c, Heading h) { return (c.y * g + c.x) * 4 + static_cast<int>(h); };

  // BFS over (cell, heading); first_action records the root action of each path.
  std::vector<int> first_action(static_cast<std::size_t>(g) * g * 4, -1);
  struct Node {
    Cell c;
    Heading h;
  };
  std::deque<Node> queue;
  first_action[index(st.agent, st.heading)] = static_cast<int>(Action::GoStraight);
  queue.push_back({st.agent, st.heading});
  bool root = true;
  while (!queue.empty()) {
    const Node n = queue.front();
    queue.pop_front();
    for (int a = 0; a < kNumActions; ++a) {
      Node m = n;
      if (a == static_cast<int>(Action::TurnLeft)) {
        m.h = turn_left(n.h);
      } else if (a == static_cast<int>(Action::TurnRight)) {
        m.h = turn_right(n.h);
      } else {
        const Cell d = heading_delta(n.h);
        const Cell next{n.c.x + d.x, n.c.y + d.y};
        if (!in_bounds(config, next) || blocked(next)) continue;
        m.c = next;
      }
      const int root_action = root ? a : first_action[index(n.c, n.h)];
      if (m.c == goal) return static_cast<Action>(root_action);
      const int idx = index(m.c, m.h);
      if (first_action[idx] != -1) continue;
      first_action[idx] = root_action;
      queue.push_back(m);
    }
    root = false;
  }
  return Action::GoStraight;
}

double success_rate(const Environment& env, TargetId target, int episodes, std::uint64_t seed,
                    const Policy& policy) {
  if (episodes < 1) throw UsageError("success_rate: episodes must be >= 1");
  long successes = 0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(e)));
    EpisodeState st = env.reset(rng(), target);
    Observation obs = env.observe(st);
    while (true) {
      StepOutcome o = env.step(st, policy(st, obs, rng));
      if (o.terminal) {
        successes += o.result == Result::Success;
        break;
      }
      obs = std::move(o.observation);
    }
  }
  return static_cast<double>(successes) / episodes;
}

double random_success_estimate(const EnvConfig& config, TargetId target, int episodes,
                               std::uint64_t seed) {
  const Environment env(config);
  return success_rate(env, target, episodes, seed,
                      [](const EpisodeState&, const Observation&, Rng& rng) {
                        return random_action(rng);
                      });
}

double CalibrationPoint::ratio() const noexcept {
  if (hard_rate <= 0.0) return std::numeric_limits<double>::infinity();
  return normal_rate / hard_rate;
}

namespace {

double pooled_rate(const EnvConfig& c, Difficulty d, int episodes, std::uint64_t seed) {
  std::vector<TargetId> ids;
  for (int k = 0; k < c.num_targets(); ++k) {
    if (c.difficulty[k] == d) ids.push_back(k);
  }
  if (ids.empty()) return 0.0;
  const int per_target = (episodes + static_cast<int>(ids.size()) - 1) / static_cast<int>(ids.size());
  double total = 0.0;
  for (TargetId k : ids) {
    total += random_success_estimate(c, k, per_target, derive_seed(seed, 1000 + k));
  }
  return total / static_cast<double>(ids.size());
}

}  // namespace

CalibrationResult calibrate(const EnvConfig& config, int episodes_per_class, std::uint64_t seed,
                            double min_ratio, bool from_one) {
  config.validate();
  CalibrationResult out;
  const int max_dist = (config.grid_size - 1) / 2;
  for (int dist = from_one ? 1 : config.hard_min_dist; dist <= max_dist; ++dist) {
    EnvConfig c = config;
    c.hard_min_dist = dist;
    CalibrationPoint p;
    p.hard_min_dist = dist;
    p.normal_rate = pooled_rate(c, Difficulty::Normal, episodes_per_class, seed);
    p.hard_rate = pooled_rate(c, Difficulty::Hard, episodes_per_class, seed);
    out.sweep.push_back(p);
    if (p.hard_rate > 0.0 && p.normal_rate >= min_ratio * p.hard_rate) {
      out.calibrated = c;
      break;
    }
  }
  return out;
}

}  // namespace lsa::env
