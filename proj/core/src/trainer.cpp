#include "lsa/trainer.hpp"

#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "lsa/checkpoint.hpp"
#include "lsa/error.hpp"

namespace lsa::train {

namespace {

// Independent RNG streams derived from the run seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kWarmupStream = 2;
constexpr std::uint64_t kEpisodeStream = 3;
constexpr std::uint64_t kEvalStream = 4;

}  // namespace

learn::NetShape TrainerConfig::net_shape() const {
  return {env.observation_size(), env.num_targets(), feature_width, projection_width};
}

void TrainerConfig::validate() const {
  if (num_workers < 1) throw ConfigError("trainer.num_workers: must be >= 1");
  if (total_updates < 0) throw ConfigError("trainer.total_updates: must be >= 0");
  if (warmup < 0) throw ConfigError("trainer.warmup: must be >= 0");
  if (eval_interval < 1) throw ConfigError("trainer.eval_interval: must be >= 1");
  if (checkpoint_interval < 0) throw ConfigError("trainer.checkpoint_interval: must be >= 0");
  if (eval_episodes < 0) throw ConfigError("trainer.eval_episodes: must be >= 0");
  if (storage_capacity < 1) throw ConfigError("trainer.storage_capacity: must be >= 1");
  if (warmup >= storage_capacity) {
    throw ConfigError("trainer.warmup: must be below trainer.storage_capacity");
  }
  if (warmup_watchdog < 1) throw ConfigError("trainer.warmup_watchdog: must be >= 1");
  env.validate();
  schedule.validate();
  loss.validate();
  net_shape().validate();
}

Trainer::Trainer(TrainerConfig config)
    : config_((config.validate(), std::move(config))),
      env_(config_.env),
      params_(learn::ParamSet::initialize(config_.net_shape(), derive_seed(config_.seed, kInitStream))),
      optimizer_(params_.layout().size),
      storage_(config_.env.num_targets(), config_.storage_capacity),
      scheduler_(config_.schedule, config_.env.num_targets()),
      started_(std::chrono::steady_clock::now()) {}

double Trainer::elapsed() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
}

std::int64_t Trainer::warmup() {
  const int n = config_.env.num_targets();
  const auto base = derive_seed(config_.seed, kWarmupStream);
  std::int64_t episodes = 0;
  std::int64_t failures = 0;
  while (storage_.size() <= config_.warmup) {
    Rng rng(derive_seed(base, static_cast<std::uint64_t>(episodes)));
    ++episodes;
    const auto instruction = static_cast<TargetId>(uniform_index(rng, static_cast<std::uint64_t>(n)));
    auto state = env_.reset(rng(), instruction);
    auto obs = env_.observe(state);
    bool success = false;
    while (!state.terminal) {
      auto out = env_.step(state, env::random_action(rng));
      if (out.result == env::Result::Success) {
        storage_.insert(std::move(obs), instruction);
        success = true;
      }
      obs = std::move(out.observation);
    }
    failures = success ? 0 : failures + 1;
    if (failures >= config_.warmup_watchdog) {
      throw CalibrationError("warmup: no success in " + std::to_string(failures) +
                             " consecutive random episodes; the environment is too hard for "
                             "random exploration (run `calibrate`)");
    }
  }
  scheduler_.refresh(0, storage_.proportions());
  warmed_up_ = true;
  return episodes;
}

void Trainer::run(const Hooks& hooks, metrics::MetricsWriter* sink, std::optional<std::int64_t> until,
                  const std::filesystem::path& checkpoint_path) {
  const std::int64_t stop = until.value_or(config_.total_updates);
  if (update_.load() >= stop) return;
  if (!warmed_up_) throw UsageError("Trainer::run called before warmup");
  next_slot_.store(update_.load());
  abort_.store(false);

  if (config_.num_workers == 1) {
    worker_loop(0, hooks, sink, stop, checkpoint_path);
    return;
  }
  std::mutex err_mu;
  std::exception_ptr first_error;
  std::vector<std::jthread> workers;
  workers.reserve(static_cast<std::size_t>(config_.num_workers));
  for (int w = 0; w < config_.num_workers; ++w) {
    workers.emplace_back([&, w] {
      try {
        worker_loop(w, hooks, sink, stop, checkpoint_path);
      } catch (...) {
        abort_.store(true);
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  workers.clear();  // joins
  if (first_error) std::rethrow_exception(first_error);
}

void Trainer::worker_loop(int worker, const Hooks& hooks, metrics::MetricsWriter* sink,
                          std::int64_t until, const std::filesystem::path& checkpoint_path) {
  const auto& loss = config_.loss;
  const bool use_supcon = loss.supcon_eta > 0.0;
  const auto episode_base = derive_seed(config_.seed, kEpisodeStream);
  learn::ParamSet local;

  while (!abort_.load()) {
    const std::int64_t slot = next_slot_.fetch_add(1);
    if (slot >= until) break;
    try {
      Rng rng(derive_seed(episode_base, static_cast<std::uint64_t>(slot)));
      {
        std::shared_lock lock(param_mu_);
        local = params_;
      }

      const TargetId instruction = scheduler_.draw_instruction(rng);
      auto state = env_.reset(rng(), instruction);
      auto obs = env_.observe(state);
      learn::Trajectory traj;
      traj.steps.reserve(static_cast<std::size_t>(config_.env.time_limit));
      EpisodeReport report;
      report.worker = worker;
      report.instruction = instruction;
      while (!state.terminal) {
        const auto f = learn::forward(local, obs, instruction);
        const auto action = static_cast<env::Action>(
            sample_categorical(std::span<const double>(f.probs.data(), env::kNumActions), rng));
        auto out = env_.step(state, action);
        report.episode_return += out.reward;
        report.result = out.result;
        if (out.result == env::Result::Success) {
          storage_.insert(obs, instruction);
          report.stored = true;
        }
        traj.steps.push_back({std::move(obs), instruction, action, out.reward, f.probs, f.value});
        obs = std::move(out.observation);
      }
      report.steps = static_cast<int>(traj.steps.size());
      traj.terminal = true;
      traj.returns = learn::compute_returns(traj, loss.gamma);
      scheduler_.record_outcome(instruction, report.result == env::Result::Success);

      const auto rl = learn::actor_critic_grads(local, traj, loss);
      learn::TotalLoss total;
      if (use_supcon) {
        const auto composition = scheduler_.composition(loss.supcon_batch);
        const auto batch = storage_.sample_composed_batch(composition, rng);
        const auto sc = learn::supcon_loss_and_grads(local, batch, loss.supcon_tau);
        total = learn::combine(rl, &sc, loss);
      } else {
        total = learn::combine(rl, nullptr, loss);
      }

      std::unique_lock lock(param_mu_);
      learn::apply_update(params_, optimizer_, std::move(total.grad), loss);
      const std::int64_t t = update_.fetch_add(1) + 1;
      report.update = t;
      scheduler_.maybe_refresh(t, storage_.proportions());
      if (hooks.on_episode) hooks.on_episode(*this, report);
      if (t % config_.eval_interval == 0) {
        auto record = metrics::snapshot_record(
            t, scheduler_, storage_,
            config_.record_wallclock ? std::optional<double>(elapsed()) : std::nullopt);
        if (sink) sink->append(record);
        if (hooks.on_snapshot) hooks.on_snapshot(*this, record);
        records_.push_back(std::move(record));
      }
      if (config_.checkpoint_interval > 0 && t % config_.checkpoint_interval == 0 &&
          !checkpoint_path.empty()) {
        ckpt::save(checkpoint_path, config_hash(), params_, optimizer_, storage_, scheduler_, t);
      }
    } catch (const NumericFault& e) {
      throw NumericFault("worker " + std::to_string(worker) + ", update slot " +
                         std::to_string(slot) + ": " + e.what());
    }
  }
}

metrics::EvalSummary Trainer::evaluate(int episodes, std::uint64_t seed) const {
  learn::ParamSet snapshot;
  {
    std::shared_lock lock(param_mu_);
    snapshot = params_;
  }
  return metrics::evaluate(snapshot, config_.env, episodes, seed);
}

std::uint64_t Trainer::config_hash() const {
  return ckpt::config_hash(config_.env, config_.net_shape());
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  std::shared_lock lock(param_mu_);
  ckpt::save(path, config_hash(), params_, optimizer_, storage_, scheduler_, update_.load());
}

void Trainer::load_checkpoint(const std::filesystem::path& path) {
  std::unique_lock lock(param_mu_);
  std::int64_t t = 0;
  ckpt::load(path, config_hash(), {params_, optimizer_, storage_, scheduler_, t});
  update_.store(t);
  next_slot_.store(t);
  warmed_up_ = true;
}

RunArtifacts train(const TrainerConfig& config, const std::filesystem::path& run_dir,
                   const Hooks& hooks) {
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(run_dir);
  RunArtifacts art;
  art.metrics_path =
      run_dir / (config.metrics_format == metrics::Format::Csv ? "metrics.csv" : "metrics.jsonl");
  art.checkpoint_path = run_dir / "checkpoint.bin";

  Trainer trainer(config);
  metrics::MetricsWriter sink(art.metrics_path, config.metrics_format);
  if (config.total_updates > 0) {
    art.warmup_episodes = trainer.warmup();
    trainer.run(hooks, &sink, std::nullopt, art.checkpoint_path);
  }
  trainer.save_checkpoint(art.checkpoint_path);
  art.updates = trainer.updates();
  if (config.eval_episodes > 0) {
    art.final_eval = trainer.evaluate(config.eval_episodes, derive_seed(config.seed, kEvalStream));
  }
  art.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return art;
}

}  // namespace lsa::train
