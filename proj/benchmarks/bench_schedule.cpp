#include <benchmark/benchmark.h>

#include "lsa/apportion.hpp"
#include "lsa/goal_storage.hpp"
#include "lsa/scheduler.hpp"

using namespace lsa;

namespace {

void BM_BatchComposition(benchmark::State& state) {
  const auto b = sched::sampling_ratios(2, static_cast<int>(state.range(0)), 0.7);
  for (auto _ : state) benchmark::DoNotOptimize(sched::batch_composition(b, 80));
}
BENCHMARK(BM_BatchComposition)->Arg(4)->Arg(16);

void BM_QueryDistribution(benchmark::State& state) {
  const std::vector<double> d{0.6, 0.38, 0.012, 0.008};
  for (auto _ : state) benchmark::DoNotOptimize(sched::query_distribution(d, 60.0));
}
BENCHMARK(BM_QueryDistribution);

void BM_SchedulerRefresh(benchmark::State& state) {
  sched::Scheduler s(sched::ScheduleConfig{}, 4);
  Rng rng(1);
  for (int i = 0; i < 400; ++i) s.record_outcome(i % 4, uniform01(rng) < 0.3);
  const std::vector<double> d{0.6, 0.38, 0.012, 0.008};
  std::int64_t t = 0;
  for (auto _ : state) s.refresh(t += 50, d);
}
BENCHMARK(BM_SchedulerRefresh);

void BM_StorageInsert(benchmark::State& state) {
  GoalStorage g(4, 10'000);
  const Observation obs = Observation::Zero(129);
  TargetId x = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(g.insert(obs, x));
    x = (x + 1) % 4;
  }
}
BENCHMARK(BM_StorageInsert);

void BM_StorageComposedBatch(benchmark::State& state) {
  GoalStorage g(4, 10'000);
  for (int i = 0; i < 10'000; ++i) g.insert(Observation::Zero(129), i % 4);
  const std::vector<int> comp{6, 6, 62, 6};
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(g.sample_composed_batch(comp, rng));
}
BENCHMARK(BM_StorageComposedBatch);

}  // namespace
