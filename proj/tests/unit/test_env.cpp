#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "lsa/env.hpp"
#include "lsa/error.hpp"

using namespace lsa;
using namespace lsa::env;

namespace {

EnvConfig small_config() {
  EnvConfig c;
  c.grid_size = 7;
  c.difficulty = {Difficulty::Normal, Difficulty::Hard};
  c.hard_min_dist = 2;
  c.time_limit = 10;
  c.window_radius = 1;
  return c;
}

// Hand-built state: agent at the grid centre facing N with the given targets.
EpisodeState manual_state(const EnvConfig& c, std::vector<Cell> targets, TargetId instruction) {
  EpisodeState s;
  s.agent = c.start();
  s.heading = Heading::N;
  s.targets = std::move(targets);
  s.instruction = instruction;
  return s;
}

}  // namespace

TEST(EnvConfig, DefaultsAndObservationSize) {
  EnvConfig c;
  EXPECT_EQ(c.grid_size, 15);
  EXPECT_EQ(c.hard_min_dist, 6);
  EXPECT_EQ(c.time_limit, 30);
  EXPECT_EQ(c.window_radius, 2);
  EXPECT_EQ(c.rewards.success, 10.0);
  EXPECT_EQ(c.rewards.wrong_target, -1.0);
  EXPECT_EQ(c.rewards.timeout, -0.1);
  EXPECT_EQ(c.rewards.per_step, -0.01);
  EXPECT_EQ(c.observation_size(), 25 * 5 + 4);
  EXPECT_NO_THROW(c.validate());
}

TEST(EnvConfig, GridTooSmallForHardTargets) {
  EnvConfig c;
  c.grid_size = 11;
  c.hard_min_dist = 6;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(Environment{c}, ConfigError);
}

TEST(EnvConfig, RejectsBadFields) {
  EnvConfig c;
  c.difficulty = {Difficulty::Normal};
  EXPECT_THROW(c.validate(), ConfigError);
  c = EnvConfig{};
  c.time_limit = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = EnvConfig{};
  c.rewards.success = std::nan("");
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Reset, SameSeedIsBitIdentical) {
  Environment env(EnvConfig{});
  const auto a = env.reset(7, 2);
  const auto b = env.reset(7, 2);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(env.observe(a) == env.observe(b));
}

TEST(Reset, AgentAtCentreFacingNorth) {
  Environment env(EnvConfig{});
  const auto s = env.reset(1, 0);
  EXPECT_EQ(s.agent, (Cell{7, 7}));
  EXPECT_EQ(s.heading, Heading::N);
  EXPECT_EQ(s.step_count, 0);
  EXPECT_FALSE(s.terminal);
}

TEST(Reset, HardTargetsRespectMinimumDistanceOver1000Seeds) {
  EnvConfig c;  // grid 15, hard_min_dist 6, targets N N H H
  Environment env(c);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto s = env.reset(seed, static_cast<TargetId>(seed % 4));
    std::set<std::pair<int, int>> cells;
    for (int k = 0; k < c.num_targets(); ++k) {
      const Cell t = s.targets[static_cast<std::size_t>(k)];
      EXPECT_NE(t, c.start());
      EXPECT_TRUE(t.x >= 0 && t.x < c.grid_size && t.y >= 0 && t.y < c.grid_size);
      cells.insert({t.x, t.y});
      if (c.difficulty[static_cast<std::size_t>(k)] == Difficulty::Hard) {
        EXPECT_GE(chebyshev(t, Cell{7, 7}), 6) << "seed " << seed;
      }
    }
    EXPECT_EQ(cells.size(), 4u) << "targets overlap at seed " << seed;
  }
}

TEST(Step, SuccessReward) {
  const auto c = small_config();
  Environment env(c);
  auto s = manual_state(c, {{3, 2}, {0, 0}}, 0);
  const auto out = env.step(s, Action::GoStraight);
  EXPECT_EQ(out.result, Result::Success);
  EXPECT_TRUE(out.terminal);
  EXPECT_DOUBLE_EQ(out.reward, 9.99);
}

TEST(Step, WrongTargetReward) {
  const auto c = small_config();
  Environment env(c);
  auto s = manual_state(c, {{0, 0}, {3, 2}}, 0);
  const auto out = env.step(s, Action::GoStraight);
  EXPECT_EQ(out.result, Result::WrongTarget);
  EXPECT_TRUE(out.terminal);
  EXPECT_DOUBLE_EQ(out.reward, -1.01);
}

TEST(Step, TurnLeftFromNorthFacesWest) {
  const auto c = small_config();
  Environment env(c);
  auto s = manual_state(c, {{0, 0}, {6, 6}}, 0);
  const auto out = env.step(s, Action::TurnLeft);
  EXPECT_EQ(s.heading, Heading::W);
  EXPECT_EQ(s.agent, c.start());
  EXPECT_DOUBLE_EQ(out.reward, -0.01);
  EXPECT_EQ(out.result, Result::Ongoing);
  env.step(s, Action::TurnRight);
  env.step(s, Action::TurnRight);
  EXPECT_EQ(s.heading, Heading::E);
}

TEST(Step, WallsClampPosition) {
  auto c = small_config();
  Environment env(c);
  auto s = manual_state(c, {{6, 6}, {6, 5}}, 0);
  for (int i = 0; i < 3; ++i) env.step(s, Action::GoStraight);
  EXPECT_EQ(s.agent, (Cell{3, 0}));
  const auto out = env.step(s, Action::GoStraight);
  EXPECT_EQ(s.agent, (Cell{3, 0}));
  EXPECT_DOUBLE_EQ(out.reward, -0.01);
}

TEST(Step, TimeoutOnLastStepAndTerminalIsFinal) {
  auto c = small_config();
  c.time_limit = 3;
  Environment env(c);
  auto s = manual_state(c, {{0, 0}, {6, 6}}, 0);
  EXPECT_EQ(env.step(s, Action::TurnLeft).result, Result::Ongoing);
  EXPECT_EQ(env.step(s, Action::TurnLeft).result, Result::Ongoing);
  const auto out = env.step(s, Action::TurnLeft);
  EXPECT_EQ(out.result, Result::Timeout);
  EXPECT_DOUBLE_EQ(out.reward, -0.11);
  EXPECT_EQ(s.step_count, 3);
  EXPECT_THROW(env.step(s, Action::TurnLeft), UsageError);
}

TEST(Step, RewardSetAndEpisodeLengthOverRandomRollouts) {
  EnvConfig c;
  Environment env(c);
  const std::set<double> allowed{-0.01, 9.99, -1.01, -0.11};
  Rng rng(5);
  for (int e = 0; e < 2000; ++e) {
    auto s = env.reset(rng(), static_cast<TargetId>(e % 4));
    int terminals = 0;
    int steps = 0;
    while (!s.terminal) {
      const Cell before = s.agent;
      const Heading h = s.heading;
      const auto a = random_action(rng);
      const auto out = env.step(s, a);
      ++steps;
      EXPECT_EQ(out.terminal, out.result != Result::Ongoing);
      terminals += out.terminal;
      bool ok = false;
      for (double r : allowed) ok |= std::abs(out.reward - r) < 1e-12;
      EXPECT_TRUE(ok) << out.reward;
      EXPECT_LE(std::abs(s.agent.x - before.x) + std::abs(s.agent.y - before.y), 1);
      if (a != Action::GoStraight) {
        EXPECT_EQ(s.agent, before);
      } else {
        EXPECT_EQ(s.heading, h);
      }
      if (out.result == Result::Success) {
        EXPECT_EQ(s.agent, s.targets[static_cast<std::size_t>(s.instruction)]);
      }
    }
    EXPECT_EQ(terminals, 1);
    EXPECT_LE(steps, c.time_limit);
  }
}

TEST(Step, TrajectoryDeterminedBySeedInstructionAndActions) {
  Environment env(EnvConfig{});
  Rng actions_a(11), actions_b(11);
  auto a = env.reset(99, 1);
  auto b = env.reset(99, 1);
  while (!a.terminal) {
    const auto oa = env.step(a, random_action(actions_a));
    const auto ob = env.step(b, random_action(actions_b));
    EXPECT_EQ(oa.reward, ob.reward);
    EXPECT_TRUE(oa.observation == ob.observation);
    EXPECT_EQ(a, b);
  }
}

TEST(Observation, EgocentricLayout) {
  const auto c = small_config();  // r = 1, N = 2 -> 3 channels per cell
  Environment env(c);
  // Agent at (3,3) facing N; target 0 straight ahead, target 1 to the right.
  auto s = manual_state(c, {{3, 2}, {4, 3}}, 0);
  auto obs = env.observe(s);
  ASSERT_EQ(obs.size(), 9 * 3 + 4);
  auto idx = [](int row, int col, int ch) { return (row * 3 + col) * 3 + ch; };
  EXPECT_EQ(obs[idx(0, 1, 0)], 1.0);  // ahead: row 0, centre column
  EXPECT_EQ(obs[idx(1, 2, 1)], 1.0);  // right: centre row, right column
  EXPECT_EQ(obs.head(27).sum(), 2.0);
  EXPECT_EQ(obs[27 + 0], 1.0);  // heading N one-hot

  // After turning right the first target is on the left and the second ahead.
  env.step(s, Action::TurnRight);
  obs = env.observe(s);
  EXPECT_EQ(obs[idx(1, 0, 0)], 1.0);
  EXPECT_EQ(obs[idx(0, 1, 1)], 1.0);
  EXPECT_EQ(obs[27 + 1], 1.0);

  // Near a wall the out-of-bounds channel lights up.
  auto edge = manual_state(c, {{6, 6}, {5, 6}}, 0);
  edge.agent = {3, 0};
  obs = env.observe(edge);
  for (int col = 0; col < 3; ++col) EXPECT_EQ(obs[idx(0, col, 2)], 1.0);
  for (int col = 0; col < 3; ++col) EXPECT_EQ(obs[idx(1, col, 2)], 0.0);
  for (int i = 0; i < obs.size(); ++i) EXPECT_TRUE(obs[i] == 0.0 || obs[i] == 1.0);
}

TEST(RandomSuccess, OraclePolicyAlwaysSucceeds) {
  EnvConfig c;
  c.time_limit = 200;
  Environment env(c);
  for (TargetId x = 0; x < c.num_targets(); ++x) {
    const double rate = success_rate(env, x, 200, 3, [&c](const EpisodeState& s, const Observation&, Rng&) {
      return oracle_action(c, s);
    });
    EXPECT_EQ(rate, 1.0) << "target " << x;
  }
}

// Exact success probability of the random agent on a 3x3 grid with T=2, enumerating every
// placement of the two targets and all nine action sequences with an independent mover.
double enumerate_3x3(TargetId instructed) {
  const std::vector<std::pair<int, int>> dirs{{0, -1}, {1, 0}, {0, 1}, {-1, 0}};  // N E S W
  std::vector<std::pair<int, int>> cells;
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x)
      if (!(x == 1 && y == 1)) cells.push_back({x, y});
  double total = 0.0;
  int placements = 0;
  for (auto t0 : cells) {
    for (auto t1 : cells) {
      if (t0 == t1) continue;
      ++placements;
      int wins = 0;
      for (int a1 = 0; a1 < 3; ++a1) {
        for (int a2 = 0; a2 < 3; ++a2) {
          int x = 1, y = 1, h = 0;
          int result = 0;  // 1 success, -1 wrong
          for (int a : {a1, a2}) {
            if (a == 0) h = (h + 3) % 4;
            if (a == 1) h = (h + 1) % 4;
            if (a == 2) {
              x = std::clamp(x + dirs[h].first, 0, 2);
              y = std::clamp(y + dirs[h].second, 0, 2);
            }
            const std::pair<int, int> pos{x, y};
            const auto target = instructed == 0 ? t0 : t1;
            const auto other = instructed == 0 ? t1 : t0;
            if (pos == target) { result = 1; break; }
            if (pos == other) { result = -1; break; }
          }
          wins += result == 1;
        }
      }
      total += wins / 9.0;
    }
  }
  return total / placements;
}

TEST(RandomSuccess, MatchesExhaustiveEnumerationOn3x3) {
  EnvConfig c;
  c.grid_size = 3;
  c.difficulty = {Difficulty::Normal, Difficulty::Normal};
  c.hard_min_dist = 1;
  c.time_limit = 2;
  c.window_radius = 1;
  const int episodes = 40'000;
  for (TargetId x = 0; x < 2; ++x) {
    const double exact = enumerate_3x3(x);
    const double est = random_success_estimate(c, x, episodes, 17);
    const double sigma = std::sqrt(exact * (1 - exact) / episodes);
    EXPECT_NEAR(est, exact, 3 * sigma) << "target " << x << " exact " << exact;
  }
}

TEST(Calibration, DefaultGridReachesTenfoldGap) {
  EnvConfig c;
  const auto result = calibrate(c, 20'000, 0);
  ASSERT_TRUE(result.calibrated.has_value());
  const auto& last = result.sweep.back();
  EXPECT_EQ(last.hard_min_dist, result.calibrated->hard_min_dist);
  EXPECT_GT(last.hard_rate, 0.0);
  EXPECT_GE(last.normal_rate, 10.0 * last.hard_rate);
  // The sweep stops at the first qualifying distance.
  for (std::size_t i = 0; i + 1 < result.sweep.size(); ++i) {
    const auto& p = result.sweep[i];
    EXPECT_TRUE(p.hard_rate == 0.0 || p.normal_rate < 10.0 * p.hard_rate);
  }
}
