#include "lsa/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "lsa/apportion.hpp"
#include "lsa/error.hpp"

namespace lsa::sched {

std::string_view to_string(SamplingMode m) noexcept {
  switch (m) {
    case SamplingMode::LSA: return "lsa";
    case SamplingMode::Uniform: return "uniform";
    case SamplingMode::ScoreGap: return "scoregap";
  }
  return "?";
}

std::string_view to_string(QueryingMode m) noexcept {
  switch (m) {
    case QueryingMode::LSA: return "lsa";
    case QueryingMode::Random: return "random";
    case QueryingMode::ScoreGap: return "scoregap";
  }
  return "?";
}

SamplingMode parse_sampling_mode(std::string_view s) {
  if (s == "lsa") return SamplingMode::LSA;
  if (s == "uniform") return SamplingMode::Uniform;
  if (s == "scoregap") return SamplingMode::ScoreGap;
  throw ConfigError("schedule.sampling: expected one of lsa|uniform|scoregap, got '" +
                    std::string(s) + "'");
}

QueryingMode parse_querying_mode(std::string_view s) {
  if (s == "lsa") return QueryingMode::LSA;
  if (s == "random") return QueryingMode::Random;
  if (s == "scoregap") return QueryingMode::ScoreGap;
  throw ConfigError("schedule.querying: expected one of lsa|random|scoregap, got '" +
                    std::string(s) + "'");
}

void ScheduleConfig::validate() const {
  if (!(m >= 0.0 && m <= 1.0)) throw ConfigError("schedule.m: must satisfy 0 <= m <= 1");
  if (!(tau_a > 0.0) || !std::isfinite(tau_a)) throw ConfigError("schedule.tau_a: must be > 0");
  if (refresh_interval < 1) throw ConfigError("schedule.refresh_interval: must be >= 1");
  if (!(scoregap_reference > 0.0)) throw ConfigError("schedule.scoregap_reference: must be > 0");
  if (success_window < 1) throw ConfigError("schedule.success_window: must be >= 1");
}

TargetId focused_target(std::span<const double> w, std::span<const double> w_prev) {
  if (w.empty() || w.size() != w_prev.size()) {
    throw UsageError("focused_target: rate vectors must be non-empty and equally sized");
  }
  TargetId best = 0;
  double best_ratio = w[0] / w_prev[0];
  for (std::size_t x = 1; x < w.size(); ++x) {
    const double r = w[x] / w_prev[x];
    if (r > best_ratio) {
      best_ratio = r;
      best = static_cast<TargetId>(x);
    }
  }
  return best;
}

std::vector<double> sampling_ratios(TargetId focused, int num_targets, double m) {
  if (num_targets < 1) throw UsageError("sampling_ratios: num_targets must be >= 1");
  if (focused < 0 || focused >= num_targets) throw UsageError("sampling_ratios: bad focused id");
  if (!(m >= 0.0 && m <= 1.0)) throw UsageError("sampling_ratios: m must lie in [0, 1]");
  std::vector<double> b(static_cast<std::size_t>(num_targets), (1.0 - m) / num_targets);
  b[focused] += m;
  return b;
}

std::vector<int> batch_composition(std::span<const double> ratios, int batch_size) {
  if (batch_size < 1) throw UsageError("batch_composition: batch_size must be >= 1");
  double sum = 0.0;
  for (double b : ratios) sum += b;
  if (std::abs(sum - 1.0) > 1e-9) throw UsageError("batch_composition: ratios must sum to 1");
  return largest_remainder(ratios, batch_size);
}

std::vector<double> query_distribution(std::span<const double> proportions, double tau_a) {
  if (proportions.empty()) throw UsageError("query_distribution: empty proportion vector");
  if (!(tau_a > 0.0)) throw UsageError("query_distribution: tau_a must be > 0");
  std::vector<double> logits(proportions.size());
  for (std::size_t x = 0; x < proportions.size(); ++x) {
    logits[x] = 1.0 / (std::max(proportions[x], kProportionFloor) * tau_a);
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - top);
    z += l;
  }
  for (double& l : logits) l /= z;
  return logits;
}

TargetId sample_instruction(std::span<const double> distribution, Rng& rng) {
  if (distribution.empty()) throw UsageError("sample_instruction: empty distribution");
  return sample_categorical(distribution, rng);
}

std::vector<double> scoregap_weights(std::span<const double> w, double reference) {
  if (!(reference > 0.0)) throw UsageError("scoregap_weights: reference must be > 0");
  if (w.empty()) throw UsageError("scoregap_weights: empty rate vector");
  std::vector<double> out(w.size());
  double z = 0.0;
  for (std::size_t x = 0; x < w.size(); ++x) {
    out[x] = std::max(reference - w[x], kProportionFloor);
    z += out[x];
  }
  for (double& v : out) v /= z;
  return out;
}

// ---------------------------------------------------------------------------------------

TargetStats::TargetStats(int num_targets, int window)
    : window_(window),
      rings_(static_cast<std::size_t>(num_targets), std::vector<std::uint8_t>(window, 0)),
      head_(static_cast<std::size_t>(num_targets), 0),
      filled_(static_cast<std::size_t>(num_targets), 0),
      successes_(static_cast<std::size_t>(num_targets), 0),
      previous_(static_cast<std::size_t>(num_targets), 0.5) {
  if (num_targets < 1) throw ConfigError("TargetStats: num_targets must be >= 1");
  if (window < 1) throw ConfigError("schedule.success_window: must be >= 1");
}

void TargetStats::record_outcome(TargetId target, bool success) {
  const auto x = static_cast<std::size_t>(target);
  if (target < 0 || x >= rings_.size()) throw UsageError("record_outcome: target out of range");
  auto& ring = rings_[x];
  if (filled_[x] == window_) {
    successes_[x] -= ring[head_[x]];
  } else {
    ++filled_[x];
  }
  ring[head_[x]] = success ? 1 : 0;
  successes_[x] += ring[head_[x]];
  head_[x] = (head_[x] + 1) % window_;
}

double TargetStats::success_rate(TargetId target) const {
  const auto x = static_cast<std::size_t>(target);
  return (successes_.at(x) + 1.0) / (filled_.at(x) + 2.0);
}

std::vector<double> TargetStats::success_rates() const {
  std::vector<double> w(rings_.size());
  for (std::size_t x = 0; x < w.size(); ++x) w[x] = success_rate(static_cast<TargetId>(x));
  return w;
}

void TargetStats::snapshot() { previous_ = success_rates(); }

void TargetStats::serialize(std::ostream& os) const {
  io::put<std::int32_t>(os, static_cast<std::int32_t>(rings_.size()));
  io::put<std::int32_t>(os, window_);
  for (const auto& r : rings_) io::put_vec(os, r);
  io::put_vec(os, head_);
  io::put_vec(os, filled_);
  io::put_vec(os, successes_);
  io::put_vec(os, previous_);
}

void TargetStats::deserialize(std::istream& is) {
  const auto n = io::get<std::int32_t>(is);
  const auto window = io::get<std::int32_t>(is);
  if (n != num_targets() || window != window_) {
    throw CheckpointError("checkpoint: target stats shape mismatch");
  }
  std::vector<std::vector<std::uint8_t>> rings;
  for (int x = 0; x < n; ++x) {
    rings.push_back(io::get_vec<std::uint8_t>(is, static_cast<std::uint64_t>(window)));
    if (static_cast<int>(rings.back().size()) != window) {
      throw CheckpointError("checkpoint: target stats ring size mismatch");
    }
  }
  auto head = io::get_vec<int>(is, 1u << 20);
  auto filled = io::get_vec<int>(is, 1u << 20);
  auto successes = io::get_vec<int>(is, 1u << 20);
  auto previous = io::get_vec<double>(is, 1u << 20);
  if (static_cast<int>(head.size()) != n || static_cast<int>(filled.size()) != n ||
      static_cast<int>(successes.size()) != n || static_cast<int>(previous.size()) != n) {
    throw CheckpointError("checkpoint: target stats length mismatch");
  }
  rings_ = std::move(rings);
  head_ = std::move(head);
  filled_ = std::move(filled);
  successes_ = std::move(successes);
  previous_ = std::move(previous);
}

// ---------------------------------------------------------------------------------------

Scheduler::Scheduler(ScheduleConfig config, int num_targets)
    : config_(config),
      num_targets_(num_targets),
      stats_(num_targets, config.success_window),
      query_counts_(static_cast<std::size_t>(num_targets), 0) {
  config_.validate();
  plan_.focused = 0;
  plan_.sampling.assign(static_cast<std::size_t>(num_targets), 1.0 / num_targets);
  plan_.querying.assign(static_cast<std::size_t>(num_targets), 1.0 / num_targets);
}

void Scheduler::record_outcome(TargetId target, bool success) {
  std::lock_guard lock(mu_);
  stats_.record_outcome(target, success);
}

TargetId Scheduler::draw_instruction(Rng& rng) {
  std::lock_guard lock(mu_);
  const TargetId x = sample_instruction(plan_.querying, rng);
  ++query_counts_[x];
  return x;
}

bool Scheduler::maybe_refresh(std::int64_t update_index, std::span<const double> proportions) {
  if (update_index % config_.refresh_interval != 0) return false;
  refresh(update_index, proportions);
  return true;
}

void Scheduler::refresh(std::int64_t update_index, std::span<const double> proportions) {
  if (static_cast<int>(proportions.size()) != num_targets_) {
    throw UsageError("refresh: proportion vector has wrong length");
  }
  std::lock_guard lock(mu_);
  const std::vector<double> w = stats_.success_rates();
  SchedulePlan next;
  next.refreshed_at = update_index;
  next.focused = focused_target(w, stats_.previous());

  switch (config_.sampling) {
    case SamplingMode::LSA:
      next.sampling = sampling_ratios(next.focused, num_targets_, config_.m);
      break;
    case SamplingMode::Uniform:
      next.sampling.assign(static_cast<std::size_t>(num_targets_), 1.0 / num_targets_);
      break;
    case SamplingMode::ScoreGap:
      next.sampling = scoregap_weights(w, config_.scoregap_reference);
      break;
  }
  switch (config_.querying) {
    case QueryingMode::LSA:
      next.querying = query_distribution(proportions, config_.tau_a);
      break;
    case QueryingMode::Random:
      next.querying.assign(static_cast<std::size_t>(num_targets_), 1.0 / num_targets_);
      break;
    case QueryingMode::ScoreGap:
      next.querying = scoregap_weights(w, config_.scoregap_reference);
      break;
  }
  stats_.snapshot();
  plan_ = std::move(next);
}

SchedulePlan Scheduler::plan() const {
  std::lock_guard lock(mu_);
  return plan_;
}

std::vector<int> Scheduler::composition(int batch_size) const {
  std::lock_guard lock(mu_);
  return batch_composition(plan_.sampling, batch_size);
}

std::vector<double> Scheduler::success_rates() const {
  std::lock_guard lock(mu_);
  return stats_.success_rates();
}

std::vector<std::int64_t> Scheduler::query_counts() const {
  std::lock_guard lock(mu_);
  return query_counts_;
}

TargetStats Scheduler::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

void Scheduler::serialize(std::ostream& os) const {
  std::lock_guard lock(mu_);
  stats_.serialize(os);
  io::put<std::int32_t>(os, plan_.focused);
  io::put<std::int64_t>(os, plan_.refreshed_at);
  io::put_vec(os, plan_.sampling);
  io::put_vec(os, plan_.querying);
  io::put_vec(os, query_counts_);
}

void Scheduler::deserialize(std::istream& is) {
  TargetStats stats(num_targets_, config_.success_window);
  stats.deserialize(is);
  SchedulePlan plan;
  plan.focused = io::get<std::int32_t>(is);
  plan.refreshed_at = io::get<std::int64_t>(is);
  plan.sampling = io::get_vec<double>(is, 1u << 20);
  plan.querying = io::get_vec<double>(is, 1u << 20);
  auto counts = io::get_vec<std::int64_t>(is, 1u << 20);
  if (static_cast<int>(plan.sampling.size()) != num_targets_ ||
      static_cast<int>(plan.querying.size()) != num_targets_ ||
      static_cast<int>(counts.size()) != num_targets_ || plan.focused < 0 ||
      plan.focused >= num_targets_) {
    throw CheckpointError("checkpoint: scheduler state mismatch");
  }
  std::lock_guard lock(mu_);
  stats_ = std::move(stats);
  plan_ = std::move(plan);
  query_counts_ = std::move(counts);
}

}  // namespace lsa::sched
