#include "lsa_cli/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>

#include <CLI11.hpp>

#include "lsa/env.hpp"
#include "lsa/error.hpp"
#include "lsa/metrics.hpp"
#include "lsa/trainer.hpp"

namespace lsa::cli {

namespace fs = std::filesystem;

config::Overrides parse_overrides(const std::vector<std::string>& extras) {
  config::Overrides out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const auto& tok = extras[i];
    if (tok.rfind("--", 0) != 0 || tok.find('.') == std::string::npos) {
      throw UsageError("unexpected argument '" + tok + "' (config overrides look like --section.key value)");
    }
    const auto eq = tok.find('=');
    if (eq != std::string::npos) {
      out[tok.substr(2, eq - 2)] = tok.substr(eq + 1);
      continue;
    }
    if (i + 1 >= extras.size()) throw UsageError("missing value for " + tok);
    out[tok.substr(2)] = extras[++i];
  }
  return out;
}

std::string resolve_out_dir(const std::string& flag, const std::string& from_config) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("LSA_OUT"); env && *env) return env;
  return from_config;
}

namespace {

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::int64_t> updates;
  std::string name;
  std::string out;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config_path, "YAML config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Run seed (trainer.seed)");
  cmd->add_option("--workers", o.workers, "Worker count (trainer.num_workers)");
  cmd->add_option("--updates", o.updates, "Learner update budget (trainer.total_updates)");
  cmd->add_option("--name", o.name, "Run name (run.name)");
  cmd->add_option("--out", o.out, "Output root; overrides $LSA_OUT and run.out_dir");
  cmd->allow_extras();
  cmd->footer("Any config key can be overridden as --section.key value, e.g. --schedule.m 0.5");
}

config::RunConfig resolve(const RunOptions& o, config::Overrides overrides) {
  if (o.seed) overrides["trainer.seed"] = std::to_string(*o.seed);
  if (o.workers) overrides["trainer.num_workers"] = std::to_string(*o.workers);
  if (o.updates) overrides["trainer.total_updates"] = std::to_string(*o.updates);
  if (!o.name.empty()) overrides["run.name"] = o.name;
  auto cfg = o.config_path.empty() ? config::parse("", overrides)
                                   : config::parse_file(o.config_path, overrides);
  cfg.out_dir = resolve_out_dir(o.out, cfg.out_dir.string());
  return cfg;
}

void print_eval(std::ostream& out, const metrics::EvalSummary& s, const env::EnvConfig& env) {
  out << std::fixed << std::setprecision(4);
  out << "overall success " << s.overall << " over " << s.total_episodes << " episodes\n";
  for (int x = 0; x < env.num_targets(); ++x) {
    const auto i = static_cast<std::size_t>(x);
    out << "  target " << x << " (" << env::to_string(env.difficulty[i]) << "): " << s.per_target[i]
        << " over " << s.episodes[i] << " episodes\n";
  }
  out.unsetf(std::ios::floatfield);
}

int run_training(const config::RunConfig& cfg, std::ostream& out) {
  const auto dir = cfg.run_dir();
  fs::create_directories(dir);
  {
    std::ofstream snap(dir / "config.yaml", std::ios::trunc);
    if (!snap) throw IoError("cannot write " + (dir / "config.yaml").string());
    snap << config::to_yaml(cfg);
  }
  const auto art = train::train(cfg.trainer, dir);
  out << "run " << cfg.name << ": " << art.updates << " updates after " << art.warmup_episodes
      << " warmup episodes in " << std::fixed << std::setprecision(1) << art.wallclock_s << " s\n";
  out.unsetf(std::ios::floatfield);
  if (art.final_eval) print_eval(out, *art.final_eval, cfg.trainer.env);
  out << "config:     " << (dir / "config.yaml").string() << "\n"
      << "metrics:    " << art.metrics_path.string() << "\n"
      << "checkpoint: " << art.checkpoint_path.string() << "\n";
  return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Goal-conditioned multi-target RL with adaptive sampling and active querying", "lsa"};
  app.require_subcommand(1);

  RunOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train with the configured schedule");
  add_run_options(train_cmd, train_opts);

  RunOptions ablate_opts;
  std::string sampling = "lsa";
  std::string querying = "lsa";
  auto* ablate_cmd = app.add_subcommand("ablate", "Train with a chosen sampling/querying combination");
  add_run_options(ablate_cmd, ablate_opts);
  ablate_cmd->add_option("--sampling", sampling, "Goal-batch sampling")
      ->check(CLI::IsMember({"lsa", "uniform", "scoregap"}));
  ablate_cmd->add_option("--querying", querying, "Instruction querying")
      ->check(CLI::IsMember({"lsa", "random", "scoregap"}));

  std::string ckpt_path;
  std::string eval_config;
  int eval_episodes = 500;
  std::uint64_t eval_seed = 0;
  auto* eval_cmd = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  eval_cmd->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--config", eval_config,
                       "Config the checkpoint was trained with (default: config.yaml beside it)");
  eval_cmd->add_option("--episodes", eval_episodes, "Evaluation episodes")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", eval_seed, "Evaluation seed");

  std::string cal_config;
  int cal_episodes = 20'000;
  std::uint64_t cal_seed = 0;
  double cal_ratio = 10.0;
  std::string cal_write;
  auto* cal_cmd = app.add_subcommand(
      "calibrate", "Sweep env.hard_min_dist until random Normal:Hard success reaches the ratio");
  cal_cmd->add_option("--config", cal_config, "Base YAML config")->check(CLI::ExistingFile);
  cal_cmd->add_option("--episodes", cal_episodes, "Random episodes per difficulty class")
      ->check(CLI::PositiveNumber);
  cal_cmd->add_option("--seed", cal_seed, "Sweep seed");
  cal_cmd->add_option("--min-ratio", cal_ratio, "Required Normal:Hard success ratio");
  cal_cmd->add_option("--write", cal_write, "Write the calibrated config to this YAML file");
  cal_cmd->allow_extras();

  std::string exp_input;
  std::string exp_output;
  std::string exp_format;
  auto* exp_cmd = app.add_subcommand("export", "Convert a JSONL metrics log");
  exp_cmd->add_option("--input", exp_input, "metrics.jsonl written by train")
      ->required()
      ->check(CLI::ExistingFile);
  exp_cmd->add_option("--output", exp_output, "Destination file")->required();
  exp_cmd->add_option("--format", exp_format, "Output format")
      ->required()
      ->check(CLI::IsMember({"csv", "jsonl"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*train_cmd) {
      return run_training(resolve(train_opts, parse_overrides(train_cmd->remaining())), out);
    }
    if (*ablate_cmd) {
      auto overrides = parse_overrides(ablate_cmd->remaining());
      overrides["schedule.sampling"] = sampling;
      overrides["schedule.querying"] = querying;
      if (ablate_opts.name.empty()) ablate_opts.name = "ablate-" + sampling + "-" + querying;
      return run_training(resolve(ablate_opts, overrides), out);
    }
    if (*eval_cmd) {
      fs::path cfg_path = eval_config;
      if (cfg_path.empty()) cfg_path = fs::path(ckpt_path).parent_path() / "config.yaml";
      const auto cfg = fs::exists(cfg_path) ? config::parse_file(cfg_path) : config::parse("");
      train::Trainer trainer(cfg.trainer);
      trainer.load_checkpoint(ckpt_path);
      out << "checkpoint " << ckpt_path << " at update " << trainer.updates() << "\n";
      print_eval(out, trainer.evaluate(eval_episodes, eval_seed), cfg.trainer.env);
      return 0;
    }
    if (*cal_cmd) {
      const auto overrides = parse_overrides(cal_cmd->remaining());
      auto cfg = cal_config.empty() ? config::parse("", overrides)
                                    : config::parse_file(cal_config, overrides);
      const auto result = env::calibrate(cfg.trainer.env, cal_episodes, cal_seed, cal_ratio);
      out << "hard_min_dist  normal_rate  hard_rate  ratio\n";
      out << std::fixed << std::setprecision(5);
      for (const auto& p : result.sweep) {
        out << std::setw(13) << p.hard_min_dist << "  " << std::setw(11) << p.normal_rate << "  "
            << std::setw(9) << p.hard_rate << "  ";
        if (p.hard_rate > 0.0)
          out << std::setprecision(2) << p.ratio() << std::setprecision(5) << "\n";
        else
          out << "inf\n";
      }
      out.unsetf(std::ios::floatfield);
      if (!result.calibrated) {
        throw CalibrationError("no hard_min_dist on this grid reaches a Normal:Hard ratio of " +
                               std::to_string(cal_ratio) + " with a nonzero Hard rate");
      }
      out << "calibrated env.hard_min_dist = " << result.calibrated->hard_min_dist << "\n";
      if (!cal_write.empty()) {
        cfg.trainer.env = *result.calibrated;
        std::ofstream f(cal_write, std::ios::trunc);
        if (!f) throw IoError("cannot write " + cal_write);
        f << config::to_yaml(cfg);
        out << "wrote " << cal_write << "\n";
      }
      return 0;
    }
    if (*exp_cmd) {
      const auto records = metrics::read_jsonl(exp_input);
      metrics::export_records(records, exp_output, metrics::parse_format(exp_format));
      out << "exported " << records.size() << " records to " << exp_output << "\n";
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace lsa::cli
