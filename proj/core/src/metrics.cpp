#include "lsa/metrics.hpp"

#include <charconv>
#include <numeric>

#include <nlohmann/json.hpp>

#include "lsa/error.hpp"

namespace lsa::metrics {

using nlohmann::json;

std::optional<double> sample_richness(std::int64_t inserted, std::int64_t sampled) {
  if (sampled == 0) return std::nullopt;
  return static_cast<double>(inserted) / static_cast<double>(sampled);
}

std::vector<double> cumulative_ratio(std::span<const std::int64_t> counts) {
  const std::int64_t total = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
  std::vector<double> out(counts.size(), counts.empty() ? 0.0 : 1.0 / static_cast<double>(counts.size()));
  if (total == 0) return out;
  for (std::size_t i = 0; i < counts.size(); ++i)
    out[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  return out;
}

MetricsRecord snapshot_record(std::int64_t update, const sched::Scheduler& scheduler,
                              const GoalStorage& storage, std::optional<double> wallclock_s) {
  MetricsRecord r;
  r.update = update;
  r.w = scheduler.success_rates();
  const auto plan = scheduler.plan();
  r.B = plan.sampling;
  r.A = plan.querying;
  r.focused = plan.focused;
  r.query_count = scheduler.query_counts();
  const auto c = storage.counters();
  r.k = c.total_sampled;
  r.M = c.total_inserted;
  r.d = std::vector<double>(c.count.size(), 1.0 / static_cast<double>(c.count.size()));
  if (c.size > 0)
    for (std::size_t i = 0; i < c.count.size(); ++i)
      r.d[i] = static_cast<double>(c.count[i]) / static_cast<double>(c.size);
  r.richness.resize(r.k.size());
  for (std::size_t i = 0; i < r.k.size(); ++i) r.richness[i] = sample_richness(r.M[i], r.k[i]);
  r.query_cum = cumulative_ratio(r.query_count);
  r.sample_cum = cumulative_ratio(r.k);
  r.wallclock_s = wallclock_s;
  return r;
}

std::optional<double> sei(std::span<const CurvePoint> curve_a, std::span<const CurvePoint> curve_b) {
  if (curve_a.empty() || curve_b.empty()) return std::nullopt;
  double best = curve_b.front().success;
  for (const auto& p : curve_b) best = std::max(best, p.success);
  auto first_reach = [best](std::span<const CurvePoint> curve) -> std::optional<double> {
    for (const auto& p : curve)
      if (p.success >= best) return p.update;
    return std::nullopt;
  };
  const auto n_b = first_reach(curve_b);
  const auto n_a = first_reach(curve_a);
  if (!n_a || !n_b || *n_b == 0.0) return std::nullopt;
  return (100.0 * *n_a) / *n_b;
}

env::Action greedy_action(const learn::ParamSet& params, const Observation& obs,
                          TargetId instruction) {
  const auto f = learn::forward(params, obs, instruction);
  int best = 0;
  for (int a = 1; a < env::kNumActions; ++a)
    if (f.probs[a] > f.probs[best]) best = a;
  return static_cast<env::Action>(best);
}

EvalSummary evaluate_policy(const env::EnvConfig& config, int episodes, std::uint64_t seed,
                            const env::Policy& policy) {
  if (episodes <= 0) throw UsageError("evaluation needs at least one episode");
  const env::Environment environment(config);
  const int n = config.num_targets();
  std::vector<int> successes(static_cast<std::size_t>(n), 0);
  EvalSummary s;
  s.episodes.assign(static_cast<std::size_t>(n), 0);
  s.per_target.assign(static_cast<std::size_t>(n), 0.0);
  int total_success = 0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(e)));
    const auto instruction = static_cast<TargetId>(uniform_index(rng, static_cast<std::uint64_t>(n)));
    auto state = environment.reset(rng(), instruction);
    auto obs = environment.observe(state);
    env::Result result = env::Result::Ongoing;
    while (!state.terminal) {
      auto out = environment.step(state, policy(state, obs, rng));
      obs = std::move(out.observation);
      result = out.result;
    }
    ++s.episodes[static_cast<std::size_t>(instruction)];
    if (result == env::Result::Success) {
      ++successes[static_cast<std::size_t>(instruction)];
      ++total_success;
    }
  }
  for (int x = 0; x < n; ++x) {
    const auto i = static_cast<std::size_t>(x);
    s.per_target[i] = s.episodes[i] ? static_cast<double>(successes[i]) / s.episodes[i] : 0.0;
  }
  s.total_episodes = episodes;
  s.overall = static_cast<double>(total_success) / episodes;
  return s;
}

EvalSummary evaluate(const learn::ParamSet& params, const env::EnvConfig& config, int episodes,
                     std::uint64_t seed) {
  return evaluate_policy(config, episodes, seed,
                         [&params](const env::EpisodeState& st, const Observation& obs, Rng&) {
                           return greedy_action(params, obs, st.instruction);
                         });
}

std::vector<std::optional<double>> value_probe(const learn::ParamSet& params,
                                               const GoalStorage& storage, std::size_t n_latest) {
  std::vector<std::optional<double>> out(static_cast<std::size_t>(storage.num_targets()));
  for (int x = 0; x < storage.num_targets(); ++x) {
    const auto entries = storage.latest(x, n_latest);
    if (entries.empty()) continue;
    double sum = 0.0;
    for (const auto& e : entries) sum += learn::forward(params, e.features, x).value;
    out[static_cast<std::size_t>(x)] = sum / static_cast<double>(entries.size());
  }
  return out;
}

Format parse_format(std::string_view s) {
  if (s == "csv") return Format::Csv;
  if (s == "jsonl") return Format::Jsonl;
  throw UsageError("unknown format '" + std::string(s) + "' (valid: csv, jsonl)");
}

namespace {

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string{}; }

}  // namespace

std::string to_jsonl_line(const MetricsRecord& r) {
  json j;
  j["T"] = r.update;
  j["w"] = r.w;
  j["k"] = r.k;
  j["M"] = r.M;
  j["d"] = r.d;
  j["B"] = r.B;
  j["A"] = r.A;
  j["focused"] = r.focused;
  json rich = json::array();
  for (const auto& v : r.richness) rich.push_back(opt_json(v));
  j["richness"] = rich;
  j["query_count"] = r.query_count;
  j["query_cum"] = r.query_cum;
  j["sample_cum"] = r.sample_cum;
  j["wallclock_s"] = opt_json(r.wallclock_s);
  return j.dump();
}

MetricsRecord from_jsonl_line(std::string_view line) {
  try {
    const json j = json::parse(line);
    MetricsRecord r;
    r.update = j.at("T").get<std::int64_t>();
    r.w = j.at("w").get<std::vector<double>>();
    r.k = j.at("k").get<std::vector<std::int64_t>>();
    r.M = j.at("M").get<std::vector<std::int64_t>>();
    r.d = j.at("d").get<std::vector<double>>();
    r.B = j.at("B").get<std::vector<double>>();
    r.A = j.at("A").get<std::vector<double>>();
    r.focused = j.at("focused").get<TargetId>();
    for (const auto& v : j.at("richness")) r.richness.push_back(opt_from(v));
    r.query_count = j.at("query_count").get<std::vector<std::int64_t>>();
    r.query_cum = j.at("query_cum").get<std::vector<double>>();
    r.sample_cum = j.at("sample_cum").get<std::vector<double>>();
    r.wallclock_s = opt_from(j.at("wallclock_s"));
    return r;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed metrics line: ") + e.what());
  }
}

std::string to_csv_rows(const MetricsRecord& r) {
  std::string out;
  for (int x = 0; x < r.num_targets(); ++x) {
    const auto i = static_cast<std::size_t>(x);
    out += std::to_string(r.update) + ',' + std::to_string(x) + ',' + num(r.w[i]) + ',' +
           std::to_string(r.k[i]) + ',' + std::to_string(r.M[i]) + ',' + num(r.d[i]) + ',' +
           num(r.B[i]) + ',' + num(r.A[i]) + ',' + (r.focused == x ? "1" : "0") + ',' +
           opt_num(r.richness[i]) + ',' + num(r.query_cum[i]) + ',' + num(r.sample_cum[i]) +
           ',' + opt_num(r.wallclock_s) + '\n';
  }
  return out;
}

void export_records(std::span<const MetricsRecord> records, const std::filesystem::path& path,
                    Format format) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  if (format == Format::Csv) {
    out << kCsvHeader << '\n';
    for (const auto& r : records) out << to_csv_rows(r);
  } else {
    for (const auto& r : records) out << to_jsonl_line(r) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<MetricsRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<MetricsRecord> records;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) records.push_back(from_jsonl_line(line));
  return records;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, Format format)
    : path_(path), format_(format), out_(path, std::ios::trunc) {
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  if (format_ == Format::Csv) out_ << kCsvHeader << '\n' << std::flush;
}

void MetricsWriter::append(const MetricsRecord& r) {
  std::lock_guard lock(mu_);
  if (format_ == Format::Csv)
    out_ << to_csv_rows(r);
  else
    out_ << to_jsonl_line(r) << '\n';
  out_.flush();
  if (!out_) throw IoError("write failed: " + path_.string());
}

}  // namespace lsa::metrics
