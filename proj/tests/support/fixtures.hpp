#pragma once

#include <vector>

#include "lsa/env.hpp"
#include "lsa/goal_storage.hpp"
#include "lsa/network.hpp"
#include "lsa/random.hpp"

namespace fixtures {

inline lsa::env::EnvConfig tiny_env() {
  lsa::env::EnvConfig c;
  c.grid_size = 7;
  c.difficulty = {lsa::env::Difficulty::Normal, lsa::env::Difficulty::Normal, lsa::env::Difficulty::Hard};
  c.hard_min_dist = 3;
  c.time_limit = 8;
  c.window_radius = 1;
  return c;
}

inline lsa::learn::NetShape tiny_shape() {
  const auto c = tiny_env();
  return {c.observation_size(), c.num_targets(), 8, 4};
}

/// Initialized parameters with extra Gaussian noise so every head, including the zero-
/// initialized value head, carries non-trivial weights.
inline lsa::learn::ParamSet noisy_params(std::uint64_t seed, double scale = 0.4) {
  auto p = lsa::learn::ParamSet::initialize(tiny_shape(), seed);
  lsa::Rng rng(seed ^ 0xabcdefULL);
  std::normal_distribution<double> n(0.0, scale);
  for (long i = 0; i < p.values().size(); ++i) p.values()[i] += n(rng);
  return p;
}

/// Observation with entries in [0, 1), denser than real occupancy windows.
inline lsa::Observation random_obs(lsa::Rng& rng, int size) {
  lsa::Observation o(size);
  for (int i = 0; i < size; ++i) o[i] = lsa::uniform01(rng);
  return o;
}

inline lsa::learn::Trajectory random_trajectory(lsa::Rng& rng, int steps, int num_targets, int obs_size,
                                                double gamma, bool terminal = true) {
  lsa::learn::Trajectory t;
  const auto instruction = static_cast<lsa::TargetId>(lsa::uniform_index(rng, static_cast<std::uint64_t>(num_targets)));
  for (int i = 0; i < steps; ++i) {
    lsa::learn::Transition tr;
    tr.obs = random_obs(rng, obs_size);
    tr.instruction = instruction;
    tr.action = static_cast<lsa::env::Action>(lsa::uniform_index(rng, 3));
    tr.reward = -0.01 + (i + 1 == steps ? 10.0 * lsa::uniform01(rng) : 0.0);
    t.steps.push_back(tr);
  }
  t.terminal = terminal;
  t.bootstrap_value = terminal ? 0.0 : lsa::uniform01(rng);
  t.returns = lsa::learn::compute_returns(t, gamma);
  return t;
}

inline std::vector<lsa::GoalEntry> random_batch(lsa::Rng& rng, int n, int num_targets, int obs_size) {
  std::vector<lsa::GoalEntry> b;
  for (int i = 0; i < n; ++i) {
    lsa::GoalEntry e;
    e.features = random_obs(rng, obs_size);
    e.target = static_cast<lsa::TargetId>(lsa::uniform_index(rng, static_cast<std::uint64_t>(num_targets)));
    e.insert_index = static_cast<std::uint64_t>(i);
    b.push_back(std::move(e));
  }
  return b;
}

}  // namespace fixtures
