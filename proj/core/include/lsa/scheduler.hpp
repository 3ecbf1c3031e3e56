#pragma once

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <span>
#include <string_view>
#include <vector>

#include "lsa/env.hpp"
#include "lsa/random.hpp"

namespace lsa::sched {

enum class SamplingMode { LSA, Uniform, ScoreGap };
enum class QueryingMode { LSA, Random, ScoreGap };

std::string_view to_string(SamplingMode m) noexcept;
std::string_view to_string(QueryingMode m) noexcept;
SamplingMode parse_sampling_mode(std::string_view s);
QueryingMode parse_querying_mode(std::string_view s);

/// Floor applied to storage proportions (querying) and score gaps (ScoreGap baseline).
inline constexpr double kProportionFloor = 1e-6;

struct ScheduleConfig {
  double m = 0.7;
  double tau_a = 60.0;
  int refresh_interval = 50;
  SamplingMode sampling = SamplingMode::LSA;
  QueryingMode querying = QueryingMode::LSA;
  double scoregap_reference = 1.0;
  int success_window = 100;

  void validate() const;
  friend bool operator==(const ScheduleConfig&, const ScheduleConfig&) = default;
};

/// argmax_x w[x] / w_prev[x], lowest id on ties.
TargetId focused_target(std::span<const double> w, std::span<const double> w_prev);

/// B(x) = m*[x == focused] + (1-m)/N.
std::vector<double> sampling_ratios(TargetId focused, int num_targets, double m);

/// Integer batch counts realizing the ratios B (largest remainder); sums to batch_size.
std::vector<int> batch_composition(std::span<const double> ratios, int batch_size);

/// Softmax of 1/(max(d, floor) * tau_a), evaluated with max subtraction.
std::vector<double> query_distribution(std::span<const double> proportions, double tau_a);

TargetId sample_instruction(std::span<const double> distribution, Rng& rng);

/// Simplified score-gap baseline: weights proportional to max(reference - w, floor).
/// Our own construction, loosely modelled on reference-score task sampling; it is not
/// a reimplementation of any published scheduler.
std::vector<double> scoregap_weights(std::span<const double> w, double reference);

/// Per-target ring of the last `window` episode outcomes with Laplace-smoothed rates.
/// Not synchronized; Scheduler owns the locking.
class TargetStats {
 public:
  TargetStats(int num_targets, int window);

  void record_outcome(TargetId target, bool success);

  /// (successes + 1) / (outcomes in window + 2).
  double success_rate(TargetId target) const;
  std::vector<double> success_rates() const;

  /// Rates captured by the last snapshot(); 1/2 everywhere before the first one.
  const std::vector<double>& previous() const noexcept { return previous_; }
  void snapshot();

  int num_targets() const noexcept { return static_cast<int>(rings_.size()); }
  int window() const noexcept { return window_; }
  int filled(TargetId target) const { return filled_.at(static_cast<std::size_t>(target)); }

  void serialize(std::ostream& os) const;
  void deserialize(std::istream& is);

 private:
  int window_;
  std::vector<std::vector<std::uint8_t>> rings_;
  std::vector<int> head_;
  std::vector<int> filled_;
  std::vector<int> successes_;
  std::vector<double> previous_;
};

/// Frozen schedule between refreshes.
struct SchedulePlan {
  TargetId focused = 0;
  std::vector<double> sampling;  // B
  std::vector<double> querying;  // A
  std::int64_t refreshed_at = -1;
};

/// Thread-safe scheduler shared by all workers: owns TargetStats, the current plan, and the
/// cumulative instruction counts.
class Scheduler {
 public:
  Scheduler(ScheduleConfig config, int num_targets);

  const ScheduleConfig& config() const noexcept { return config_; }
  int num_targets() const noexcept { return num_targets_; }

  void record_outcome(TargetId target, bool success);

  /// Multinomial draw from the current querying distribution; counts the query.
  TargetId draw_instruction(Rng& rng);

  /// Recomputes focused target, B and A when `update_index` is a multiple of the refresh
  /// interval. `proportions` are the current storage proportions. Returns true on refresh.
  bool maybe_refresh(std::int64_t update_index, std::span<const double> proportions);

  /// Unconditional refresh: focused target from w / w_prev, then w_prev <- w.
  void refresh(std::int64_t update_index, std::span<const double> proportions);

  SchedulePlan plan() const;
  std::vector<int> composition(int batch_size) const;
  std::vector<double> success_rates() const;
  std::vector<std::int64_t> query_counts() const;
  TargetStats stats() const;

  void serialize(std::ostream& os) const;
  void deserialize(std::istream& is);

 private:
  ScheduleConfig config_;
  int num_targets_;
  mutable std::mutex mu_;
  TargetStats stats_;
  SchedulePlan plan_;
  std::vector<std::int64_t> query_counts_;
};

}  // namespace lsa::sched
