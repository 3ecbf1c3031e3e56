#pragma once

#include <cstdint>
#include <filesystem>

#include "lsa/env.hpp"
#include "lsa/goal_storage.hpp"
#include "lsa/network.hpp"
#include "lsa/optimizer.hpp"
#include "lsa/scheduler.hpp"

namespace lsa::ckpt {

inline constexpr char kMagic[4] = {'L', 'S', 'A', '1'};
inline constexpr std::uint32_t kFormatVersion = 1;

/// FNV-1a over every EnvConfig field and the network shape. A checkpoint only loads into a
/// run with the same hash.
std::uint64_t config_hash(const env::EnvConfig& env, const learn::NetShape& shape);

/// Mutable views of everything a checkpoint carries.
struct TrainingState {
  learn::ParamSet& params;
  learn::OptimizerState& optimizer;
  GoalStorage& storage;
  sched::Scheduler& scheduler;
  std::int64_t& update;
};

/// Layout: magic, u32 version, u64 config hash, then the sections params, optimizer,
/// storage, stats and counter, each prefixed with its u64 byte length. Written to a
/// temporary file and renamed into place.
void save(const std::filesystem::path& path, std::uint64_t hash, const learn::ParamSet& params,
          const learn::OptimizerState& optimizer, const GoalStorage& storage,
          const sched::Scheduler& scheduler, std::int64_t update);

/// Validates the whole file before touching `state`; throws CheckpointError on a bad magic,
/// version, hash, or a truncated/malformed section.
void load(const std::filesystem::path& path, std::uint64_t expected_hash, TrainingState state);

}  // namespace lsa::ckpt
