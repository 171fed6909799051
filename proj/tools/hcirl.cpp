// Command-line runner: train, sweep, compare and validate.
//
// Exit codes: 0 success, 1 invalid configuration or arguments, 2 failure
// while computing (including failed sweep or compare cells).

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "hcirl/baselines.hpp"
#include "hcirl/config.hpp"
#include "hcirl/report.hpp"
#include "hcirl/serialize.hpp"
#include "hcirl/sweeps.hpp"
#include "hcirl/trainer.hpp"

namespace fs = std::filesystem;
using namespace hcirl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

struct Flags {
  std::string config;
  std::size_t workers = default_workers();
  bool dump_trajectories = false;
  bool dump_advantages = false;
  std::string save_policy;
  std::string load_policy;
  std::map<std::string, std::string> values;  // config key -> flag value
};

std::string flag_name(const std::string& key) {
  std::string s = key;
  std::replace(s.begin(), s.end(), '_', '-');
  return "--" + s;
}

void add_common(CLI::App& app, Flags& flags) {
  app.add_option("--config", flags.config, "INI file with [env], [train] and [run] sections");
  app.add_option("--workers", flags.workers, "worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--dump-trajectories", flags.dump_trajectories,
               "write every training episode to trajectories.jsonl");
  app.add_flag("--dump-advantages", flags.dump_advantages,
               "write per-step estimates to advantages.csv");
  app.add_option("--save-policy", flags.save_policy, "write the final policy as JSON");
  app.add_option("--load-policy", flags.load_policy, "start training from a saved policy");
  for (const auto& key : config_keys()) {
    app.add_option(flag_name(key.name), flags.values[key.name], "[" + key.section + "] " + key.name);
  }
}

Overrides overrides_from(const CLI::App& app, const Flags& flags) {
  Overrides out;
  for (const auto& key : config_keys()) {
    if (app.count(flag_name(key.name)) > 0) out.emplace_back(key.name, flags.values.at(key.name));
  }
  return out;
}

bool is_policy_gradient(AgentKind kind) { return kind == AgentKind::ours || kind == AgentKind::raw_q; }

void print_final(const std::string& label, const TrainResult& run) {
  const MetricsRecord& m = run.final_metrics();
  std::cout << label << ": cumulative_reward=" << format_double(m.cumulative_reward)
            << " avg_episode_reward=" << format_double(m.avg_episode_reward)
            << " success_rate=" << format_double(m.success_rate) << " convergence_iteration="
            << (run.convergence_iteration ? std::to_string(*run.convergence_iteration) : "none")
            << "\n";
}

int run_train(const RunManifest& m, const Flags& flags, const fs::path& dir) {
  TrainOptions options;
  options.workers = flags.workers;
  if (!flags.load_policy.empty()) options.initial_policy = load_policy(flags.load_policy);

  std::ofstream trajectories;
  std::ofstream advantages;
  if (flags.dump_trajectories) {
    trajectories.open(dir / "trajectories.jsonl", std::ios::binary | std::ios::trunc);
    if (!trajectories) throw IoError("cannot write " + (dir / "trajectories.jsonl").string());
  }
  if (flags.dump_advantages) {
    advantages.open(dir / "advantages.csv", std::ios::binary | std::ios::trunc);
    if (!advantages) throw IoError("cannot write " + (dir / "advantages.csv").string());
    advantages << "iteration,step,q_hat,v_hat,advantage\n";
  }
  if (flags.dump_trajectories || flags.dump_advantages) {
    options.observer = [&](std::size_t k, std::span<const Trajectory> batch,
                           std::span<const EstimatedStep> steps) {
      if (flags.dump_trajectories) {
        for (const auto& traj : batch) trajectories << trajectory_line(traj);
      }
      if (flags.dump_advantages) {
        for (std::size_t i = 0; i < steps.size(); ++i) {
          advantages << k << ',' << i << ',' << format_double(steps[i].q_hat) << ','
                     << format_double(steps[i].v_hat) << ',' << format_double(steps[i].advantage)
                     << '\n';
        }
      }
    };
  }

  TrainResult run;
  try {
    run = run_baseline(m.agent, m.env, m.train, options);
  } catch (const TrainingAborted& e) {
    Json failed{{"iteration", e.iteration()}, {"error", e.what()}, {"policy", to_json(e.checkpoint())}};
    write_file(dir / "checkpoint.failed.json", failed.dump() + "\n");
    throw;
  }
  emit_report(Report{run.metrics, run.training, std::nullopt, std::nullopt}, dir);
  if (run.policy) {
    save_policy(*run.policy, dir / "policy.json");
    if (!flags.save_policy.empty()) save_policy(*run.policy, flags.save_policy);
  }
  print_final(to_string(m.agent), run);
  return kExitOk;
}

int run_sweep(const RunManifest& m, const Flags& flags, const fs::path& dir) {
  const SweepResult result = sweep(m.param, m.resolved_grid(), seed_range(m.train.seed, m.seeds),
                                   m.env, m.train, m.agent, flags.workers);
  emit_report(Report{{}, {}, result, std::nullopt}, dir);
  for (const auto& s : result.summary) {
    std::cout << to_string(result.parameter) << "=" << format_double(s.value)
              << ": avg_episode_reward mean=" << format_double(s.avg_episode_reward.mean)
              << " se=" << format_double(s.avg_episode_reward.se)
              << " success_rate mean=" << format_double(s.success_rate.mean) << " runs="
              << s.avg_episode_reward.n << "\n";
  }
  if (result.failures() > 0) {
    for (const auto& c : result.cells) {
      if (c.run.failed) {
        std::cerr << "cell " << format_double(c.value) << "/" << c.run.seed
                  << " failed: " << c.run.error << "\n";
      }
    }
    return kExitRuntime;
  }
  return kExitOk;
}

int run_compare(const RunManifest& m, const Flags& flags, const fs::path& dir) {
  const CompareResult result =
      compare(m.agents, m.env, m.train, seed_range(m.train.seed, m.seeds), flags.workers);
  emit_report(Report{{}, {}, std::nullopt, result}, dir);
  for (const auto& r : result.rows) {
    std::cout << to_string(r.agent) << ": cum_reward_median=" << format_double(r.cum_reward_median)
              << " avg_reward_median=" << format_double(r.avg_reward_median)
              << " convergence_median=" << format_double(r.convergence_median)
              << " success_median=" << format_double(r.success_median) << " runs=" << r.runs
              << "\n";
  }
  if (result.failures() > 0) {
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
      const RunCell& c = result.cells[i];
      if (c.failed) {
        std::cerr << to_string(result.agents[i / result.seeds.size()]) << "/" << c.seed
                  << " failed: " << c.error << "\n";
      }
    }
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy-gradient training and experiment runner for a scripted-user dialog task"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags flags;
  add_common(app, flags);
  CLI::App* train_cmd = app.add_subcommand("train", "train one agent and write its metrics");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "sweep one parameter over a grid and seeds");
  CLI::App* compare_cmd = app.add_subcommand("compare", "compare agents over seeds");
  CLI::App* validate_cmd = app.add_subcommand("validate", "resolve the configuration and print it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  RunManifest manifest;
  try {
    manifest = parse_config(flags.config, overrides_from(app, flags));
    const bool policy_io = flags.dump_trajectories || flags.dump_advantages ||
                           !flags.save_policy.empty() || !flags.load_policy.empty();
    if (policy_io && !(train_cmd->parsed() && is_policy_gradient(manifest.agent))) {
      throw ValidationError(
          "--dump-*, --save-policy and --load-policy need `train` with agent ours or raw_q");
    }
    if (compare_cmd->parsed() && manifest.agents.size() < 2) {
      throw ValidationError("compare needs at least two agents");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }

  if (validate_cmd->parsed()) {
    std::cout << snapshot(manifest);
    return kExitOk;
  }

  const fs::path dir = manifest.output_dir();
  try {
    ensure_directory(dir);
    write_file(dir / "config.snapshot.txt", snapshot(manifest));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }

  try {
    if (train_cmd->parsed()) return run_train(manifest, flags, dir);
    if (sweep_cmd->parsed()) return run_sweep(manifest, flags, dir);
    if (compare_cmd->parsed()) return run_compare(manifest, flags, dir);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
