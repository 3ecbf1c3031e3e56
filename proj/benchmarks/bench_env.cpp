#include <benchmark/benchmark.h>

#include "lsa/env.hpp"

using namespace lsa;

namespace {

void BM_ResetAndObserve(benchmark::State& state) {
  env::EnvConfig c;
  c.window_radius = static_cast<int>(state.range(0));
  const env::Environment e(c);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto s = e.reset(seed++, 0);
    benchmark::DoNotOptimize(e.observe(s));
  }
}
BENCHMARK(BM_ResetAndObserve)->Arg(2)->Arg(5);

void BM_RandomEpisode(benchmark::State& state) {
  const env::Environment e(env::EnvConfig{});
  Rng rng(1);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto s = e.reset(seed++, 2);
    env::StepOutcome out;
    do {
      out = e.step(s, env::random_action(rng));
      benchmark::DoNotOptimize(out.observation.data());
    } while (out.result == env::Result::Ongoing);
  }
}
BENCHMARK(BM_RandomEpisode);

}  // namespace
