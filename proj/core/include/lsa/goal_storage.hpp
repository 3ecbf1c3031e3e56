#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "lsa/env.hpp"
#include "lsa/random.hpp"

namespace lsa {

struct GoalEntry {
  Observation features;
  TargetId target = 0;
  std::uint64_t insert_index = 0;
};

/// Counter snapshot taken atomically with respect to every other storage operation.
struct StorageCounters {
  std::vector<std::int64_t> count;           // c_x: entries currently held per target
  std::vector<std::int64_t> total_inserted;  // M_x: cumulative inserts per target
  std::vector<std::int64_t> total_sampled;   // k_x: cumulative composed-batch draws per target
  std::int64_t size = 0;
  std::int64_t capacity = 0;
};

/// Capacity-bounded (goal observation, target) store shared by all workers.
/// Eviction is global FIFO; every public member is atomic with respect to the others.
class GoalStorage {
 public:
  static constexpr std::int64_t kDefaultCapacity = 10'000;

  GoalStorage(int num_targets, std::int64_t capacity = kDefaultCapacity);

  int num_targets() const noexcept { return num_targets_; }
  std::int64_t capacity() const noexcept { return capacity_; }

  /// Appends the entry (its insert_index is assigned here) and evicts the globally oldest
  /// entry when over capacity.
  std::optional<GoalEntry> insert(Observation features, TargetId target);

  std::int64_t size() const;
  StorageCounters counters() const;

  /// d^x = c_x / sum(c); uniform 1/N while the storage is empty.
  std::vector<double> proportions() const;

  /// Draws composition[x] entries uniformly with replacement from target x. Quota of an
  /// empty target is redistributed over non-empty targets in proportion to their own
  /// quota (uniformly if those quotas are all zero). Throws EmptyStorageError when empty.
  std::vector<GoalEntry> sample_composed_batch(std::span<const int> composition, Rng& rng);

  /// Up to n most recent entries for `target`, newest last.
  std::vector<GoalEntry> latest(TargetId target, std::size_t n) const;

  /// All entries in insertion order.
  std::vector<GoalEntry> entries() const;

  /// Recounts entries by label and checks sum(c) = |entries| <= capacity and M_x >= c_x.
  bool check_invariants() const;

  /// FNV-1a over entries and counters; used to audit read-only operations.
  std::uint64_t content_hash() const;

  void serialize(std::ostream& os) const;
  /// Replaces the contents; throws CheckpointError on malformed input.
  void deserialize(std::istream& is);

 private:
  int num_targets_;
  std::int64_t capacity_;
  mutable std::mutex mu_;
  std::deque<TargetId> order_;                   // labels in insertion order
  std::vector<std::deque<GoalEntry>> by_target_;  // per-target FIFO slices
  std::vector<std::int64_t> total_inserted_;
  std::vector<std::int64_t> total_sampled_;
  std::uint64_t next_index_ = 0;
};

}  // namespace lsa
