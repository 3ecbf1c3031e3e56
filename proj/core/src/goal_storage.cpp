#include "lsa/goal_storage.hpp"

#include <numeric>
#include <string>

#include "binary_io.hpp"
#include "lsa/apportion.hpp"
#include "lsa/error.hpp"

namespace lsa {

GoalStorage::GoalStorage(int num_targets, std::int64_t capacity)
    : num_targets_(num_targets),
      capacity_(capacity),
      by_target_(static_cast<std::size_t>(num_targets)),
      total_inserted_(static_cast<std::size_t>(num_targets), 0),
      total_sampled_(static_cast<std::size_t>(num_targets), 0) {
  if (num_targets < 1) throw ConfigError("storage: num_targets must be >= 1");
  if (capacity < 1) throw ConfigError("storage.capacity: must be >= 1");
}

std::optional<GoalEntry> GoalStorage::insert(Observation features, TargetId target) {
  if (target < 0 || target >= num_targets_) {
    throw UsageError("storage insert: target " + std::to_string(target) + " out of range");
  }
  std::lock_guard lock(mu_);
  by_target_[target].push_back(GoalEntry{std::move(features), target, next_index_++});
  order_.push_back(target);
  ++total_inserted_[target];

  if (static_cast<std::int64_t>(order_.size()) <= capacity_) return std::nullopt;
  const TargetId oldest = order_.front();
  order_.pop_front();
  GoalEntry evicted = std::move(by_target_[oldest].front());
  by_target_[oldest].pop_front();
  return evicted;
}

std::int64_t GoalStorage::size() const {
  std::lock_guard lock(mu_);
  return static_cast<std::int64_t>(order_.size());
}

StorageCounters GoalStorage::counters() const {
  std::lock_guard lock(mu_);
  StorageCounters c;
  c.count.reserve(by_target_.size());
  for (const auto& d : by_target_) c.count.push_back(static_cast<std::int64_t>(d.size()));
  c.total_inserted = total_inserted_;
  c.total_sampled = total_sampled_;
  c.size = static_cast<std::int64_t>(order_.size());
  c.capacity = capacity_;
  return c;
}

std::vector<double> GoalStorage::proportions() const {
  std::lock_guard lock(mu_);
  std::vector<double> d(static_cast<std::size_t>(num_targets_), 1.0 / num_targets_);
  if (order_.empty()) return d;
  const double total = static_cast<double>(order_.size());
  for (int x = 0; x < num_targets_; ++x) d[x] = static_cast<double>(by_target_[x].size()) / total;
  return d;
}

std::vector<GoalEntry> GoalStorage::sample_composed_batch(std::span<const int> composition,
                                                          Rng& rng) {
  if (static_cast<int>(composition.size()) != num_targets_) {
    throw UsageError("sample_composed_batch: composition length must equal num_targets");
  }
  for (int q : composition) {
    if (q < 0) throw UsageError("sample_composed_batch: negative quota");
  }
  std::lock_guard lock(mu_);
  if (order_.empty()) throw EmptyStorageError("goal storage is empty");

  std::vector<int> counts(composition.begin(), composition.end());
  int orphaned = 0;
  std::vector<double> weights(counts.size(), 0.0);
  bool any_weight = false;
  for (int x = 0; x < num_targets_; ++x) {
    if (by_target_[x].empty()) {
      orphaned += counts[x];
      counts[x] = 0;
    } else if (counts[x] > 0) {
      weights[x] = counts[x];
      any_weight = true;
    }
  }
  if (orphaned > 0) {
    if (!any_weight) {
      for (int x = 0; x < num_targets_; ++x) weights[x] = by_target_[x].empty() ? 0.0 : 1.0;
    }
    const std::vector<int> extra = largest_remainder(weights, orphaned);
    for (int x = 0; x < num_targets_; ++x) counts[x] += extra[x];
  }

  std::vector<GoalEntry> batch;
  batch.reserve(static_cast<std::size_t>(std::accumulate(counts.begin(), counts.end(), 0)));
  for (int x = 0; x < num_targets_; ++x) {
    const auto& pool = by_target_[x];
    for (int i = 0; i < counts[x]; ++i) batch.push_back(pool[uniform_index(rng, pool.size())]);
    total_sampled_[x] += counts[x];
  }
  return batch;
}

std::vector<GoalEntry> GoalStorage::latest(TargetId target, std::size_t n) const {
  std::lock_guard lock(mu_);
  const auto& pool = by_target_.at(static_cast<std::size_t>(target));
  const std::size_t take = std::min(n, pool.size());
  return {pool.end() - static_cast<std::ptrdiff_t>(take), pool.end()};
}

std::vector<GoalEntry> GoalStorage::entries() const {
  std::lock_guard lock(mu_);
  std::vector<std::size_t> cursor(by_target_.size(), 0);
  std::vector<GoalEntry> out;
  out.reserve(order_.size());
  for (TargetId x : order_) out.push_back(by_target_[x][cursor[x]++]);
  return out;
}

bool GoalStorage::check_invariants() const {
  std::lock_guard lock(mu_);
  std::vector<std::int64_t> recount(by_target_.size(), 0);
  for (TargetId x : order_) ++recount[x];
  std::int64_t sum = 0;
  for (int x = 0; x < num_targets_; ++x) {
    const auto c = static_cast<std::int64_t>(by_target_[x].size());
    if (recount[x] != c || total_inserted_[x] < c) return false;
    for (const auto& e : by_target_[x]) {
      if (e.target != x) return false;
    }
    sum += c;
  }
  return sum == static_cast<std::int64_t>(order_.size()) && sum <= capacity_;
}

std::uint64_t GoalStorage::content_hash() const {
  std::lock_guard lock(mu_);
  io::Fnv1a h;
  for (TargetId x : order_) h.pod(x);
  for (const auto& pool : by_target_) {
    for (const auto& e : pool) {
      h.pod(e.insert_index);
      h.bytes(e.features.data(), sizeof(double) * static_cast<std::size_t>(e.features.size()));
    }
  }
  for (auto v : total_inserted_) h.pod(v);
  for (auto v : total_sampled_) h.pod(v);
  h.pod(next_index_);
  return h.value();
}

void GoalStorage::serialize(std::ostream& os) const {
  std::lock_guard lock(mu_);
  io::put<std::int32_t>(os, num_targets_);
  io::put<std::int64_t>(os, capacity_);
  io::put<std::uint64_t>(os, next_index_);
  io::put_vec(os, total_inserted_);
  io::put_vec(os, total_sampled_);
  io::put<std::uint64_t>(os, order_.size());
  std::vector<std::size_t> cursor(by_target_.size(), 0);
  for (TargetId x : order_) {
    const GoalEntry& e = by_target_[x][cursor[x]++];
    io::put<std::int32_t>(os, e.target);
    io::put<std::uint64_t>(os, e.insert_index);
    io::put_eigen(os, e.features);
  }
}

void GoalStorage::deserialize(std::istream& is) {
  const auto n = io::get<std::int32_t>(is);
  const auto capacity = io::get<std::int64_t>(is);
  const auto next_index = io::get<std::uint64_t>(is);
  auto inserted = io::get_vec<std::int64_t>(is, 1u << 20);
  auto sampled = io::get_vec<std::int64_t>(is, 1u << 20);
  if (n != num_targets_ || static_cast<int>(inserted.size()) != n ||
      static_cast<int>(sampled.size()) != n) {
    throw CheckpointError("checkpoint: goal storage target count mismatch");
  }
  const auto count = io::get<std::uint64_t>(is);
  if (count > static_cast<std::uint64_t>(capacity)) {
    throw CheckpointError("checkpoint: goal storage over capacity");
  }
  std::deque<TargetId> order;
  std::vector<std::deque<GoalEntry>> by_target(static_cast<std::size_t>(n));
  for (std::uint64_t i = 0; i < count; ++i) {
    GoalEntry e;
    e.target = io::get<std::int32_t>(is);
    e.insert_index = io::get<std::uint64_t>(is);
    e.features = io::get_eigen(is, 1u << 24);
    if (e.target < 0 || e.target >= n) throw CheckpointError("checkpoint: bad goal label");
    order.push_back(e.target);
    by_target[e.target].push_back(std::move(e));
  }
  std::lock_guard lock(mu_);
  capacity_ = capacity;
  next_index_ = next_index;
  total_inserted_ = std::move(inserted);
  total_sampled_ = std::move(sampled);
  order_ = std::move(order);
  by_target_ = std::move(by_target);
}

}  // namespace lsa
