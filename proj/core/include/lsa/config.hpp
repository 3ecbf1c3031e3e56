#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lsa/trainer.hpp"

namespace lsa::config {

/// Everything needed to launch one run. YAML sections: env, schedule, loss, net, trainer, run.
struct RunConfig {
  train::TrainerConfig trainer;
  std::string name = "run";
  std::filesystem::path out_dir = "runs";

  /// Nested invariants plus a filesystem-safe run name.
  void validate() const;
  std::filesystem::path run_dir() const { return out_dir / name; }
};

/// Dotted key -> raw value text; values are parsed as YAML scalars or flow sequences.
using Overrides = std::map<std::string, std::string>;

/// All recognised dotted keys, in documentation order.
const std::vector<std::string>& valid_keys();

/// True for names made of [A-Za-z0-9._-] that are not "." or "..".
bool is_safe_run_name(std::string_view name);

/// Applies YAML text (possibly empty) then overrides onto the defaults and validates.
/// Unknown keys raise ConfigError listing the valid ones.
RunConfig parse(std::string_view yaml_text, const Overrides& overrides = {});
RunConfig parse_file(const std::filesystem::path& path, const Overrides& overrides = {});

/// Fully resolved config as YAML; parse(to_yaml(c)) == c.
std::string to_yaml(const RunConfig& config);

}  // namespace lsa::config
