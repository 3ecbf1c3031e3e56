#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <shared_mutex>
#include <vector>

#include "lsa/env.hpp"
#include "lsa/goal_storage.hpp"
#include "lsa/metrics.hpp"
#include "lsa/network.hpp"
#include "lsa/optimizer.hpp"
#include "lsa/scheduler.hpp"

namespace lsa::train {

struct TrainerConfig {
  int num_workers = 4;
  std::int64_t total_updates = 200'000;
  int warmup = 1000;
  std::int64_t eval_interval = 1000;
  std::int64_t checkpoint_interval = 0;  // 0: final checkpoint only
  std::uint64_t seed = 0;
  int eval_episodes = 500;
  std::int64_t storage_capacity = GoalStorage::kDefaultCapacity;
  int feature_width = 64;
  int projection_width = 32;
  bool record_wallclock = false;
  metrics::Format metrics_format = metrics::Format::Jsonl;
  /// Consecutive failed warmup episodes tolerated before giving up.
  std::int64_t warmup_watchdog = 1'000'000;

  env::EnvConfig env;
  sched::ScheduleConfig schedule;
  learn::LossConfig loss;

  learn::NetShape net_shape() const;
  /// Validates this config and the nested ones; throws ConfigError naming the field.
  void validate() const;
};

struct EpisodeReport {
  std::int64_t update = 0;  // value of T after this episode's learner update
  int worker = 0;
  TargetId instruction = 0;
  env::Result result = env::Result::Ongoing;
  int steps = 0;
  double episode_return = 0.0;
  bool stored = false;  // goal observation inserted into storage
};

struct RunArtifacts {
  std::filesystem::path checkpoint_path;
  std::filesystem::path metrics_path;
  std::optional<metrics::EvalSummary> final_eval;
  std::int64_t updates = 0;
  std::int64_t warmup_episodes = 0;
  double wallclock_s = 0.0;
};

class Trainer;

/// Callbacks run while the trainer holds its update lock, so they observe a quiescent
/// snapshot and need no synchronization of their own.
struct Hooks {
  std::function<void(const Trainer&, const EpisodeReport&)> on_episode;
  std::function<void(const Trainer&, const metrics::MetricsRecord&)> on_snapshot;
};

/// Owns the shared learning state: parameters, optimizer, goal storage, scheduler, and the
/// global update counter T.
class Trainer {
 public:
  explicit Trainer(TrainerConfig config);

  const TrainerConfig& config() const noexcept { return config_; }
  const learn::ParamSet& params() const noexcept { return params_; }
  const learn::OptimizerState& optimizer() const noexcept { return optimizer_; }
  const GoalStorage& storage() const noexcept { return storage_; }
  const sched::Scheduler& scheduler() const noexcept { return scheduler_; }
  std::int64_t updates() const noexcept { return update_.load(); }
  bool warmed_up() const noexcept { return warmed_up_; }
  const std::vector<metrics::MetricsRecord>& records() const noexcept { return records_; }

  /// Random-action episodes with uniform instructions until |storage| > warmup, then the
  /// first scheduler refresh. Returns the number of episodes run. Throws CalibrationError
  /// after warmup_watchdog consecutive failures.
  std::int64_t warmup();

  /// Runs learner episodes until T reaches `until` (default: total_updates). Snapshot
  /// records are appended to `sink` when given.
  void run(const Hooks& hooks = {}, metrics::MetricsWriter* sink = nullptr,
           std::optional<std::int64_t> until = std::nullopt,
           const std::filesystem::path& checkpoint_path = {});

  /// Greedy evaluation of the current parameters.
  metrics::EvalSummary evaluate(int episodes, std::uint64_t seed) const;

  std::uint64_t config_hash() const;
  void save_checkpoint(const std::filesystem::path& path) const;
  /// Restores parameters, optimizer, storage, scheduler and T; marks warmup as done.
  void load_checkpoint(const std::filesystem::path& path);

 private:
  void worker_loop(int worker, const Hooks& hooks, metrics::MetricsWriter* sink,
                   std::int64_t until, const std::filesystem::path& checkpoint_path);
  double elapsed() const;

  TrainerConfig config_;
  env::Environment env_;
  learn::ParamSet params_;
  learn::OptimizerState optimizer_;
  GoalStorage storage_;
  sched::Scheduler scheduler_;
  bool warmed_up_ = false;

  mutable std::shared_mutex param_mu_;
  std::atomic<std::int64_t> next_slot_{0};
  std::atomic<std::int64_t> update_{0};
  std::atomic<bool> abort_{false};
  std::vector<metrics::MetricsRecord> records_;
  std::chrono::steady_clock::time_point started_;
};

/// Full run: warmup, training to total_updates, final checkpoint and evaluation. Writes
/// `metrics.<jsonl|csv>` and `checkpoint.bin` into run_dir (created if missing).
RunArtifacts train(const TrainerConfig& config, const std::filesystem::path& run_dir,
                   const Hooks& hooks = {});

}  // namespace lsa::train
