#pragma once

// Parameter sweeps and multi-agent comparisons over seeds. Every (value, seed)
// or (agent, seed) cell is an independent run written into a fixed slot, so
// the worker count never changes the result.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hcirl/baselines.hpp"
#include "hcirl/env.hpp"
#include "hcirl/errors.hpp"
#include "hcirl/metrics.hpp"
#include "hcirl/parallel.hpp"
#include "hcirl/trainer.hpp"

namespace hcirl {

enum class SweepParameter { gamma, lambda, noise, skew };

inline std::string to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::gamma: return "gamma";
    case SweepParameter::lambda: return "lambda";
    case SweepParameter::noise: return "noise";
    case SweepParameter::skew: return "skew";
  }
  return "unknown";
}

/// Configuration key that the parameter overrides.
inline std::string config_key(SweepParameter p) {
  switch (p) {
    case SweepParameter::gamma: return "gamma";
    case SweepParameter::lambda: return "eps_decay";
    case SweepParameter::noise: return "noise_prob";
    case SweepParameter::skew: return "imbalance_skew";
  }
  return "unknown";
}

/// Accepts the short names and the config keys.
inline SweepParameter parse_sweep_parameter(std::string_view name) {
  for (const auto p : {SweepParameter::gamma, SweepParameter::lambda, SweepParameter::noise,
                       SweepParameter::skew}) {
    if (name == to_string(p) || name == config_key(p)) return p;
  }
  throw ValidationError("unknown sweep parameter '" + std::string(name) +
                        "' (expected gamma, lambda, noise or skew)");
}

inline std::vector<double> default_grid(SweepParameter p) {
  switch (p) {
    case SweepParameter::gamma: return {0.5, 0.8, 0.9, 0.95, 0.99, 0.999};
    case SweepParameter::lambda: return {0.9, 0.95, 0.99, 0.995, 0.999};
    case SweepParameter::noise: return {0.0, 0.1, 0.3, 0.5, 0.8};
    case SweepParameter::skew: return {0.0, 0.5, 1.0, 2.0};
  }
  return {};
}

inline constexpr std::size_t kDefaultSeedCount = 10;

/// seeds first, first + 1, ..., first + count - 1.
inline std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = first + i;
  return seeds;
}

inline void apply_sweep_value(SweepParameter p, double value, EnvConfig& env, TrainConfig& train) {
  switch (p) {
    case SweepParameter::gamma: train.gamma = value; break;
    case SweepParameter::lambda: train.schedule.decay = value; break;
    case SweepParameter::noise: env.noise_prob = value; break;
    case SweepParameter::skew: env.imbalance_skew = value; break;
  }
}

/// Outcome of one seeded run, reduced to its final evaluation.
struct RunCell {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double cumulative_reward = 0.0;
  double avg_episode_reward = 0.0;
  double success_rate = 0.0;
  std::optional<std::size_t> convergence_iteration;
};

inline RunCell summarize_run(std::uint64_t seed, const TrainResult& run) {
  RunCell cell;
  cell.seed = seed;
  const MetricsRecord& last = run.final_metrics();
  cell.cumulative_reward = last.cumulative_reward;
  cell.avg_episode_reward = last.avg_episode_reward;
  cell.success_rate = last.success_rate;
  cell.convergence_iteration = run.convergence_iteration;
  return cell;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

/// Mean and standard error (sample sd / sqrt(n)) in the given order.
inline MeanSe mean_se(std::span<const double> xs) {
  MeanSe out;
  out.n = xs.size();
  if (xs.empty()) return out;
  double sum = 0.0;
  for (const double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (const double x : xs) ss += (x - out.mean) * (x - out.mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  out.se = sd / std::sqrt(static_cast<double>(xs.size()));
  return out;
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw ValidationError("median of an empty set");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2.0;
}

struct SweepCell {
  double value = 0.0;
  RunCell run;
};

struct SweepSummary {
  double value = 0.0;
  MeanSe avg_episode_reward;
  MeanSe success_rate;
  MeanSe cumulative_reward;
};

struct SweepResult {
  SweepParameter parameter = SweepParameter::gamma;
  std::vector<double> grid;
  std::vector<std::uint64_t> seeds;  // sorted
  std::vector<SweepCell> cells;      // value-major, seeds in sorted order
  std::vector<SweepSummary> summary;

  std::size_t failures() const {
    return static_cast<std::size_t>(
        std::count_if(cells.begin(), cells.end(), [](const SweepCell& c) { return c.run.failed; }));
  }
  const SweepCell& cell(std::size_t value_index, std::size_t seed_index) const {
    return cells.at(value_index * seeds.size() + seed_index);
  }
};

/// Aggregates per value over non-failed cells, reduced in seed order.
inline std::vector<SweepSummary> summarize_sweep(const SweepResult& r) {
  std::vector<SweepSummary> out;
  for (std::size_t v = 0; v < r.grid.size(); ++v) {
    std::vector<double> avg;
    std::vector<double> success;
    std::vector<double> cum;
    for (std::size_t s = 0; s < r.seeds.size(); ++s) {
      const auto& c = r.cell(v, s);
      if (c.run.failed) continue;
      avg.push_back(c.run.avg_episode_reward);
      success.push_back(c.run.success_rate);
      cum.push_back(c.run.cumulative_reward);
    }
    out.push_back({r.grid[v], mean_se(avg), mean_se(success), mean_se(cum)});
  }
  return out;
}

/// Trains `agent` on every (value, seed) pair. Failed cells are recorded,
/// not thrown.
inline SweepResult sweep(SweepParameter parameter, std::vector<double> grid,
                         std::vector<std::uint64_t> seeds, const EnvConfig& env_config,
                         const TrainConfig& train_config, AgentKind agent = AgentKind::ours,
                         std::size_t workers = 1) {
  if (grid.empty()) throw ValidationError("sweep grid is empty");
  if (seeds.empty()) throw ValidationError("sweep seed list is empty");
  std::sort(seeds.begin(), seeds.end());
  SweepResult result;
  result.parameter = parameter;
  result.grid = std::move(grid);
  result.seeds = std::move(seeds);
  const std::size_t S = result.seeds.size();
  result.cells.resize(result.grid.size() * S);
  parallel_for(result.cells.size(), workers, [&](std::size_t i) {
    const double value = result.grid[i / S];
    const std::uint64_t seed = result.seeds[i % S];
    SweepCell& cell = result.cells[i];
    cell.value = value;
    try {
      EnvConfig env = env_config;
      TrainConfig train = train_config;
      apply_sweep_value(parameter, value, env, train);
      train.seed = seed;
      env.validate();
      cell.run = summarize_run(seed, run_baseline(agent, env, train));
    } catch (const std::exception& e) {
      cell.run = RunCell{};
      cell.run.seed = seed;
      cell.run.failed = true;
      cell.run.error = e.what();
    }
  });
  result.summary = summarize_sweep(result);
  return result;
}

struct CompareRow {
  AgentKind agent = AgentKind::ours;
  double cum_reward_median = 0.0;
  double avg_reward_median = 0.0;
  double convergence_median = 0.0;
  double success_median = 0.0;
  std::size_t runs = 0;
};

/// Mean over seeds of the per-iteration gradient-variance traces.
struct VarianceTrace {
  AgentKind agent = AgentKind::ours;
  std::vector<double> advantage;
  std::vector<double> raw_q;
};

struct CompareResult {
  std::vector<AgentKind> agents;
  std::vector<std::uint64_t> seeds;  // sorted
  std::size_t max_iterations = 0;
  std::vector<RunCell> cells;  // agent-major, seeds in sorted order
  std::vector<CompareRow> rows;
  std::vector<VarianceTrace> variance;

  const RunCell& cell(std::size_t agent_index, std::size_t seed_index) const {
    return cells.at(agent_index * seeds.size() + seed_index);
  }
  std::size_t failures() const {
    return static_cast<std::size_t>(
        std::count_if(cells.begin(), cells.end(), [](const RunCell& c) { return c.failed; }));
  }
};

/// A run that never converged counts as max_iterations.
inline double censored_convergence(const RunCell& cell, std::size_t max_iterations) {
  return static_cast<double>(cell.convergence_iteration.value_or(max_iterations));
}

inline CompareResult compare(std::vector<AgentKind> agents, const EnvConfig& env_config,
                             const TrainConfig& train_config, std::vector<std::uint64_t> seeds,
                             std::size_t workers = 1) {
  if (agents.empty()) throw ValidationError("compare needs at least one agent");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    for (std::size_t j = i + 1; j < agents.size(); ++j) {
      if (agents[i] == agents[j]) throw ValidationError("agent listed twice: " + to_string(agents[i]));
    }
  }
  if (seeds.empty()) throw ValidationError("compare seed list is empty");
  env_config.validate();
  train_config.validate();
  std::sort(seeds.begin(), seeds.end());

  CompareResult result;
  result.agents = std::move(agents);
  result.seeds = std::move(seeds);
  result.max_iterations = train_config.max_iterations;
  const std::size_t S = result.seeds.size();
  result.cells.resize(result.agents.size() * S);
  std::vector<std::vector<TrainingRecord>> training(result.cells.size());
  parallel_for(result.cells.size(), workers, [&](std::size_t i) {
    const AgentKind agent = result.agents[i / S];
    const std::uint64_t seed = result.seeds[i % S];
    try {
      TrainConfig train = train_config;
      train.seed = seed;
      TrainResult run = run_baseline(agent, env_config, train);
      result.cells[i] = summarize_run(seed, run);
      training[i] = std::move(run.training);
    } catch (const std::exception& e) {
      result.cells[i] = RunCell{};
      result.cells[i].seed = seed;
      result.cells[i].failed = true;
      result.cells[i].error = e.what();
    }
  });

  for (std::size_t a = 0; a < result.agents.size(); ++a) {
    std::vector<double> cum;
    std::vector<double> avg;
    std::vector<double> conv;
    std::vector<double> success;
    for (std::size_t s = 0; s < S; ++s) {
      const RunCell& c = result.cell(a, s);
      if (c.failed) continue;
      cum.push_back(c.cumulative_reward);
      avg.push_back(c.avg_episode_reward);
      conv.push_back(censored_convergence(c, result.max_iterations));
      success.push_back(c.success_rate);
    }
    CompareRow row;
    row.agent = result.agents[a];
    row.runs = cum.size();
    if (!cum.empty()) {
      row.cum_reward_median = median(cum);
      row.avg_reward_median = median(avg);
      row.convergence_median = median(conv);
      row.success_median = median(success);
    }
    result.rows.push_back(row);

    const AgentKind kind = result.agents[a];
    if (kind != AgentKind::ours && kind != AgentKind::raw_q) continue;
    VarianceTrace trace;
    trace.agent = kind;
    trace.advantage.assign(result.max_iterations, 0.0);
    trace.raw_q.assign(result.max_iterations, 0.0);
    std::size_t n = 0;
    for (std::size_t s = 0; s < S; ++s) {
      const auto& rec = training[a * S + s];
      if (rec.size() != result.max_iterations) continue;
      ++n;
      for (std::size_t k = 0; k < rec.size(); ++k) {
        trace.advantage[k] += rec[k].grad_var_advantage;
        trace.raw_q[k] += rec[k].grad_var_raw_q;
      }
    }
    if (n == 0) continue;
    for (std::size_t k = 0; k < result.max_iterations; ++k) {
      trace.advantage[k] /= static_cast<double>(n);
      trace.raw_q[k] /= static_cast<double>(n);
    }
    result.variance.push_back(std::move(trace));
  }
  return result;
}

}  // namespace hcirl
