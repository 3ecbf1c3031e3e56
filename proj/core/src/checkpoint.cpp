#include "lsa/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "binary_io.hpp"
#include "lsa/error.hpp"

namespace lsa::ckpt {

std::uint64_t config_hash(const env::EnvConfig& env, const learn::NetShape& shape) {
  io::Fnv1a h;
  h.pod(static_cast<std::int32_t>(env.grid_size));
  h.pod(static_cast<std::int32_t>(env.difficulty.size()));
  for (auto d : env.difficulty) h.pod(static_cast<std::int32_t>(d));
  h.pod(static_cast<std::int32_t>(env.hard_min_dist));
  h.pod(static_cast<std::int32_t>(env.time_limit));
  h.pod(static_cast<std::int32_t>(env.window_radius));
  h.pod(env.rewards.success);
  h.pod(env.rewards.wrong_target);
  h.pod(env.rewards.timeout);
  h.pod(env.rewards.per_step);
  h.pod(static_cast<std::int32_t>(shape.obs_size));
  h.pod(static_cast<std::int32_t>(shape.num_targets));
  h.pod(static_cast<std::int32_t>(shape.feature_width));
  h.pod(static_cast<std::int32_t>(shape.projection_width));
  return h.value();
}

namespace {

template <typename F>
void put_section(std::ostream& os, F&& write) {
  std::ostringstream buf(std::ios::binary);
  write(buf);
  io::put_str(os, buf.str());
}

std::istringstream section(std::istream& is, const char* name) {
  try {
    return std::istringstream(io::get_str(is, 1ULL << 34), std::ios::binary);
  } catch (const CheckpointError&) {
    throw CheckpointError(std::string("checkpoint truncated in section '") + name + "'");
  }
}

}  // namespace

void save(const std::filesystem::path& path, std::uint64_t hash, const learn::ParamSet& params,
          const learn::OptimizerState& optimizer, const GoalStorage& storage,
          const sched::Scheduler& scheduler, std::int64_t update) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os.write(kMagic, sizeof kMagic);
    io::put<std::uint32_t>(os, kFormatVersion);
    io::put<std::uint64_t>(os, hash);
    put_section(os, [&](std::ostream& s) { params.serialize(s); });
    put_section(os, [&](std::ostream& s) { optimizer.serialize(s); });
    put_section(os, [&](std::ostream& s) { storage.serialize(s); });
    put_section(os, [&](std::ostream& s) { scheduler.serialize(s); });
    put_section(os, [&](std::ostream& s) { io::put<std::int64_t>(s, update); });
    os.flush();
    if (!os) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

void load(const std::filesystem::path& path, std::uint64_t expected_hash, TrainingState state) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint " + path.string());
  char magic[sizeof kMagic];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw CheckpointError(path.string() + ": not a checkpoint (bad magic)");
  }
  const auto version = io::get<std::uint32_t>(is);
  if (version != kFormatVersion) {
    throw CheckpointError(path.string() + ": unsupported checkpoint version " +
                          std::to_string(version));
  }
  const auto hash = io::get<std::uint64_t>(is);
  if (hash != expected_hash) {
    throw CheckpointError(path.string() +
                          ": checkpoint was written for a different environment or network shape");
  }

  // Parse into scratch objects first so a bad file leaves the live state untouched.
  const auto p_bytes = section(is, "params").str();
  const auto o_bytes = section(is, "optimizer").str();
  const auto s_bytes = section(is, "storage").str();
  const auto t_bytes = section(is, "stats").str();
  const auto c_bytes = section(is, "counter").str();

  learn::ParamSet params(state.params.shape());
  learn::OptimizerState optimizer(state.params.layout().size);
  GoalStorage storage(state.storage.num_targets(), state.storage.capacity());
  sched::Scheduler scheduler(state.scheduler.config(), state.scheduler.num_targets());
  std::int64_t update = 0;
  auto parse = [](const std::string& bytes, const char* name, auto&& read) {
    std::istringstream in(bytes, std::ios::binary);
    read(in);
    if (in.peek() != std::char_traits<char>::eof()) {
      throw CheckpointError(std::string("checkpoint: trailing bytes in section '") + name + "'");
    }
  };
  parse(p_bytes, "params", [&](std::istream& s) { params.deserialize(s); });
  parse(o_bytes, "optimizer", [&](std::istream& s) { optimizer.deserialize(s); });
  parse(s_bytes, "storage", [&](std::istream& s) { storage.deserialize(s); });
  parse(t_bytes, "stats", [&](std::istream& s) { scheduler.deserialize(s); });
  parse(c_bytes, "counter", [&](std::istream& s) { update = io::get<std::int64_t>(s); });
  if (update < 0) throw CheckpointError("checkpoint: negative update counter");
  if (optimizer.m.size() != params.layout().size) {
    throw CheckpointError("checkpoint: optimizer state size mismatch");
  }

  state.params = std::move(params);
  state.optimizer = std::move(optimizer);
  parse(s_bytes, "storage", [&](std::istream& s) { state.storage.deserialize(s); });
  parse(t_bytes, "stats", [&](std::istream& s) { state.scheduler.deserialize(s); });
  state.update = update;
}

}  // namespace lsa::ckpt
