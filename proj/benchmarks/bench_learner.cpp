#include <benchmark/benchmark.h>

#include "lsa/env.hpp"
#include "lsa/network.hpp"
#include "lsa/optimizer.hpp"

using namespace lsa;
using namespace lsa::learn;

namespace {

const env::EnvConfig kEnv{};

NetShape shape() { return {kEnv.observation_size(), kEnv.num_targets(), 64, 32}; }

Observation random_obs(Rng& rng) {
  Observation o(kEnv.observation_size());
  for (auto& v : o) v = uniform01(rng) < 0.1 ? 1.0 : 0.0;
  return o;
}

Trajectory rollout(const ParamSet& p, int steps, Rng& rng) {
  Trajectory t;
  for (int i = 0; i < steps; ++i) {
    Transition tr;
    tr.obs = random_obs(rng);
    tr.instruction = 1;
    const auto f = forward(p, tr.obs, tr.instruction);
    tr.probs = f.probs;
    tr.value = f.value;
    tr.action = static_cast<env::Action>(uniform_index(rng, 3));
    tr.reward = -0.01;
    t.steps.push_back(tr);
  }
  t.returns = compute_returns(t, 0.99);
  return t;
}

void BM_Forward(benchmark::State& state) {
  const auto p = ParamSet::initialize(shape(), 1);
  Rng rng(2);
  const auto obs = random_obs(rng);
  for (auto _ : state) benchmark::DoNotOptimize(forward(p, obs, 2));
}
BENCHMARK(BM_Forward);

void BM_ActorCriticGrads(benchmark::State& state) {
  const auto p = ParamSet::initialize(shape(), 1);
  Rng rng(3);
  const auto t = rollout(p, static_cast<int>(state.range(0)), rng);
  const LossConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(actor_critic_grads(p, t, cfg));
}
BENCHMARK(BM_ActorCriticGrads)->Arg(10)->Arg(30);

void BM_SupConGrads(benchmark::State& state) {
  const auto p = ParamSet::initialize(shape(), 1);
  Rng rng(4);
  std::vector<GoalEntry> batch;
  for (int i = 0; i < state.range(0); ++i)
    batch.push_back({random_obs(rng), static_cast<TargetId>(i % 4), static_cast<std::uint64_t>(i)});
  for (auto _ : state) benchmark::DoNotOptimize(supcon_loss_and_grads(p, batch, 0.07));
}
BENCHMARK(BM_SupConGrads)->Arg(16)->Arg(80);

void BM_ApplyUpdate(benchmark::State& state) {
  auto p = ParamSet::initialize(shape(), 1);
  OptimizerState opt(p.values().size());
  const Gradient g = Gradient::Constant(p.values().size(), 1e-3);
  const LossConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(apply_update(p, opt, g, cfg));
}
BENCHMARK(BM_ApplyUpdate);

}  // namespace
