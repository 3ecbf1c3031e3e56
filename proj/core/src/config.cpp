#include "lsa/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "lsa/error.hpp"

namespace lsa::config {

namespace {

struct Field {
  std::string key;
  std::function<void(RunConfig&, const YAML::Node&)> set;
  std::function<YAML::Node(const RunConfig&)> get;
};

template <typename T>
T as(const YAML::Node& node, const std::string& key, const char* type) {
  if (!node.IsScalar()) throw ConfigError(key + ": expected " + type);
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(key + ": expected " + type + ", got '" + node.Scalar() + "'");
  }
}

// Builds a field bound to a member reached through `ref`.
template <typename T, typename Ref>
Field scalar(std::string key, const char* type, Ref ref) {
  return Field{key,
               [key, type, ref](RunConfig& c, const YAML::Node& n) { ref(c) = as<T>(n, key, type); },
               [ref](const RunConfig& c) { return YAML::Node(ref(const_cast<RunConfig&>(c))); }};
}

#define LSA_REF(expr) [](RunConfig& c) -> auto& { return c.expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> all = [] {
    std::vector<Field> f;
    f.push_back(scalar<int>("env.grid_size", "integer", LSA_REF(trainer.env.grid_size)));
    f.push_back(Field{
        "env.targets",
        [](RunConfig& c, const YAML::Node& n) {
          if (!n.IsSequence()) throw ConfigError("env.targets: expected a list of normal|hard");
          std::vector<env::Difficulty> d;
          for (const auto& item : n) {
            const auto s = as<std::string>(item, "env.targets", "normal|hard");
            const auto parsed = env::parse_difficulty(s);
            if (!parsed) throw ConfigError("env.targets: expected normal|hard, got '" + s + "'");
            d.push_back(*parsed);
          }
          c.trainer.env.difficulty = std::move(d);
        },
        [](const RunConfig& c) {
          YAML::Node n(YAML::NodeType::Sequence);
          for (auto d : c.trainer.env.difficulty) n.push_back(std::string(env::to_string(d)));
          n.SetStyle(YAML::EmitterStyle::Flow);
          return n;
        }});
    f.push_back(scalar<int>("env.hard_min_dist", "integer", LSA_REF(trainer.env.hard_min_dist)));
    f.push_back(scalar<int>("env.time_limit", "integer", LSA_REF(trainer.env.time_limit)));
    f.push_back(scalar<int>("env.window_radius", "integer", LSA_REF(trainer.env.window_radius)));
    f.push_back(scalar<double>("env.rewards.success", "number", LSA_REF(trainer.env.rewards.success)));
    f.push_back(scalar<double>("env.rewards.wrong_target", "number",
                               LSA_REF(trainer.env.rewards.wrong_target)));
    f.push_back(scalar<double>("env.rewards.timeout", "number", LSA_REF(trainer.env.rewards.timeout)));
    f.push_back(scalar<double>("env.rewards.per_step", "number", LSA_REF(trainer.env.rewards.per_step)));

    f.push_back(scalar<double>("schedule.m", "number", LSA_REF(trainer.schedule.m)));
    f.push_back(scalar<double>("schedule.tau_a", "number", LSA_REF(trainer.schedule.tau_a)));
    f.push_back(scalar<int>("schedule.refresh_interval", "integer",
                            LSA_REF(trainer.schedule.refresh_interval)));
    f.push_back(Field{"schedule.sampling",
                      [](RunConfig& c, const YAML::Node& n) {
                        c.trainer.schedule.sampling = sched::parse_sampling_mode(
                            as<std::string>(n, "schedule.sampling", "lsa|uniform|scoregap"));
                      },
                      [](const RunConfig& c) {
                        return YAML::Node(std::string(sched::to_string(c.trainer.schedule.sampling)));
                      }});
    f.push_back(Field{"schedule.querying",
                      [](RunConfig& c, const YAML::Node& n) {
                        c.trainer.schedule.querying = sched::parse_querying_mode(
                            as<std::string>(n, "schedule.querying", "lsa|random|scoregap"));
                      },
                      [](const RunConfig& c) {
                        return YAML::Node(std::string(sched::to_string(c.trainer.schedule.querying)));
                      }});
    f.push_back(scalar<double>("schedule.scoregap_reference", "number",
                               LSA_REF(trainer.schedule.scoregap_reference)));
    f.push_back(scalar<int>("schedule.success_window", "integer",
                            LSA_REF(trainer.schedule.success_window)));

    f.push_back(scalar<double>("loss.gamma", "number", LSA_REF(trainer.loss.gamma)));
    f.push_back(scalar<double>("loss.entropy_beta", "number", LSA_REF(trainer.loss.entropy_beta)));
    f.push_back(scalar<double>("loss.supcon_eta", "number", LSA_REF(trainer.loss.supcon_eta)));
    f.push_back(scalar<double>("loss.supcon_tau", "number", LSA_REF(trainer.loss.supcon_tau)));
    f.push_back(scalar<double>("loss.lr", "number", LSA_REF(trainer.loss.lr)));
    f.push_back(scalar<double>("loss.clip_norm", "number", LSA_REF(trainer.loss.clip_norm)));
    f.push_back(scalar<int>("loss.supcon_batch", "integer", LSA_REF(trainer.loss.supcon_batch)));

    f.push_back(scalar<int>("net.feature_width", "integer", LSA_REF(trainer.feature_width)));
    f.push_back(scalar<int>("net.projection_width", "integer", LSA_REF(trainer.projection_width)));

    f.push_back(scalar<int>("trainer.num_workers", "integer", LSA_REF(trainer.num_workers)));
    f.push_back(scalar<std::int64_t>("trainer.total_updates", "integer",
                                     LSA_REF(trainer.total_updates)));
    f.push_back(scalar<int>("trainer.warmup", "integer", LSA_REF(trainer.warmup)));
    f.push_back(scalar<std::int64_t>("trainer.eval_interval", "integer",
                                     LSA_REF(trainer.eval_interval)));
    f.push_back(scalar<std::int64_t>("trainer.checkpoint_interval", "integer",
                                     LSA_REF(trainer.checkpoint_interval)));
    f.push_back(scalar<std::uint64_t>("trainer.seed", "non-negative integer", LSA_REF(trainer.seed)));
    f.push_back(scalar<int>("trainer.eval_episodes", "integer", LSA_REF(trainer.eval_episodes)));
    f.push_back(scalar<std::int64_t>("trainer.storage_capacity", "integer",
                                     LSA_REF(trainer.storage_capacity)));
    f.push_back(scalar<bool>("trainer.record_wallclock", "boolean", LSA_REF(trainer.record_wallclock)));
    f.push_back(Field{"trainer.metrics_format",
                      [](RunConfig& c, const YAML::Node& n) {
                        const auto s = as<std::string>(n, "trainer.metrics_format", "csv|jsonl");
                        if (s == "csv") {
                          c.trainer.metrics_format = metrics::Format::Csv;
                        } else if (s == "jsonl") {
                          c.trainer.metrics_format = metrics::Format::Jsonl;
                        } else {
                          throw ConfigError("trainer.metrics_format: expected csv|jsonl, got '" + s + "'");
                        }
                      },
                      [](const RunConfig& c) {
                        return YAML::Node(c.trainer.metrics_format == metrics::Format::Csv ? "csv" : "jsonl");
                      }});
    f.push_back(scalar<std::int64_t>("trainer.warmup_watchdog", "integer",
                                     LSA_REF(trainer.warmup_watchdog)));

    f.push_back(scalar<std::string>("run.name", "string", LSA_REF(name)));
    f.push_back(Field{"run.out_dir",
                      [](RunConfig& c, const YAML::Node& n) {
                        c.out_dir = as<std::string>(n, "run.out_dir", "path");
                      },
                      [](const RunConfig& c) { return YAML::Node(c.out_dir.string()); }});
    return f;
  }();
  return all;
}

#undef LSA_REF

const Field& find_field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return f;
  std::string msg = "unknown config key '" + key + "'; valid keys:";
  for (const auto& f : fields()) msg += "\n  " + f.key;
  throw ConfigError(msg);
}

void flatten(const YAML::Node& node, const std::string& prefix,
             std::vector<std::pair<std::string, YAML::Node>>& out) {
  if (node.IsMap()) {
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      flatten(kv.second, prefix.empty() ? key : prefix + "." + key, out);
    }
  } else if (!prefix.empty()) {
    out.emplace_back(prefix, node);
  }
}

}  // namespace

void RunConfig::validate() const {
  trainer.validate();
  if (!is_safe_run_name(name)) {
    throw ConfigError("run.name: '" + name + "' is not filesystem-safe (use [A-Za-z0-9._-])");
  }
  if (out_dir.empty()) throw ConfigError("run.out_dir: must not be empty");
}

const std::vector<std::string>& valid_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

bool is_safe_run_name(std::string_view name) {
  if (name.empty() || name == "." || name == ".." || name.size() > 128) return false;
  for (char ch : name) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
                    ch == '.' || ch == '_' || ch == '-';
    if (!ok) return false;
  }
  return true;
}

RunConfig parse(std::string_view yaml_text, const Overrides& overrides) {
  RunConfig config;
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: malformed YAML: ") + e.what());
  }
  if (!root.IsNull() && !root.IsMap()) throw ConfigError("config: top level must be a mapping");
  std::vector<std::pair<std::string, YAML::Node>> entries;
  flatten(root, "", entries);
  for (const auto& [key, node] : entries) find_field(key).set(config, node);
  for (const auto& [key, text] : overrides) {
    const auto& field = find_field(key);
    YAML::Node node;
    try {
      node = YAML::Load(text);
    } catch (const YAML::Exception&) {
      node = YAML::Node(text);
    }
    if (node.IsNull()) node = YAML::Node(text);
    field.set(config, node);
  }
  config.validate();
  return config;
}

RunConfig parse_file(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), overrides);
}

std::string to_yaml(const RunConfig& config) {
  YAML::Node root;
  for (const auto& f : fields()) {
    std::vector<std::string> parts;
    std::stringstream ss(f.key);
    for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
    if (parts.size() == 2) {
      root[parts[0]][parts[1]] = f.get(config);
    } else {
      root[parts[0]][parts[1]][parts[2]] = f.get(config);
    }
  }
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << root;
  return std::string(e.c_str()) + "\n";
}

}  // namespace lsa::config
