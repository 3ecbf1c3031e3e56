#include <benchmark/benchmark.h>

#include "lsa/trainer.hpp"

using namespace lsa;

namespace {

// Learner updates per second with the default map and network, after warmup.
void BM_LearnerUpdates(benchmark::State& state) {
  train::TrainerConfig c;
  c.num_workers = static_cast<int>(state.range(0));
  c.warmup = 200;
  c.eval_interval = 1'000'000;
  c.total_updates = 1'000'000;
  train::Trainer t(c);
  t.warmup();
  std::int64_t until = 0;
  for (auto _ : state) {
    until += 100;
    t.run({}, nullptr, until);
  }
  state.SetItemsProcessed(until);
}
BENCHMARK(BM_LearnerUpdates)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
