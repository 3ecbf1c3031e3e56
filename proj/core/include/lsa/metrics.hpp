#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lsa/env.hpp"
#include "lsa/goal_storage.hpp"
#include "lsa/network.hpp"
#include "lsa/scheduler.hpp"

namespace lsa::metrics {

/// One training-progress snapshot. Optional fields are "undefined" and serialize as
/// null (JSONL) or an empty cell (CSV).
struct MetricsRecord {
  std::int64_t update = 0;
  std::vector<double> w;
  std::vector<std::int64_t> k;  // cumulative sampled goal states
  std::vector<std::int64_t> M;  // cumulative inserted goal states
  std::vector<double> d;        // storage proportions
  std::vector<double> B;
  std::vector<double> A;
  TargetId focused = 0;
  std::vector<std::optional<double>> richness;
  std::vector<std::int64_t> query_count;
  std::vector<double> query_cum;
  std::vector<double> sample_cum;
  std::optional<double> wallclock_s;

  int num_targets() const noexcept { return static_cast<int>(w.size()); }
  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

/// M / k, undefined when k == 0.
std::optional<double> sample_richness(std::int64_t inserted, std::int64_t sampled);

/// Running count of each target over the total; uniform while the total is zero.
std::vector<double> cumulative_ratio(std::span<const std::int64_t> counts);

MetricsRecord snapshot_record(std::int64_t update, const sched::Scheduler& scheduler,
                              const GoalStorage& storage, std::optional<double> wallclock_s);

struct CurvePoint {
  double update = 0.0;
  double success = 0.0;
};

/// Sample-efficiency improvement of B over A, in percent. s* is B's best success rate,
/// n_B the first update where B reaches it and n_A the first update where A does:
/// SEI = 100 * n_A / n_B. Undefined if A never reaches s* or n_B is zero.
std::optional<double> sei(std::span<const CurvePoint> curve_a, std::span<const CurvePoint> curve_b);

struct EvalSummary {
  double overall = 0.0;
  std::vector<double> per_target;  // success rate per instructed target
  std::vector<int> episodes;       // episodes per instructed target
  int total_episodes = 0;
  friend bool operator==(const EvalSummary&, const EvalSummary&) = default;
};

/// Greedy (argmax, lowest action on ties) action of the network.
env::Action greedy_action(const learn::ParamSet& params, const Observation& obs,
                          TargetId instruction);

/// Runs `episodes` episodes with uniformly random instructions under `policy`.
EvalSummary evaluate_policy(const env::EnvConfig& config, int episodes, std::uint64_t seed,
                            const env::Policy& policy);

/// Greedy evaluation of `params`; no side effects on anything shared.
EvalSummary evaluate(const learn::ParamSet& params, const env::EnvConfig& config, int episodes = 500,
                     std::uint64_t seed = 0);

/// Mean critic value over the latest n goal states stored per target, conditioned on that
/// target's instruction. Undefined for targets with no stored entries.
std::vector<std::optional<double>> value_probe(const learn::ParamSet& params,
                                               const GoalStorage& storage,
                                               std::size_t n_latest = 10);

enum class Format { Csv, Jsonl };
Format parse_format(std::string_view s);

/// Long-format CSV: one row per target per snapshot.
inline constexpr std::string_view kCsvHeader =
    "T,target,w,k,M,d,B,A,focused,richness,query_cum,sample_cum,wallclock_s";

std::string to_jsonl_line(const MetricsRecord& r);
MetricsRecord from_jsonl_line(std::string_view line);
std::string to_csv_rows(const MetricsRecord& r);

void export_records(std::span<const MetricsRecord> records, const std::filesystem::path& path,
                    Format format);
std::vector<MetricsRecord> read_jsonl(const std::filesystem::path& path);

/// Append-only metrics sink; appends are serialized.
class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& path, Format format);
  void append(const MetricsRecord& r);
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  Format format_;
  std::mutex mu_;
  std::ofstream out_;
};

}  // namespace lsa::metrics
