#pragma once

// Comparison agents: uniform random, REINFORCE without a baseline (the raw_q
// ablation of the trainer) and tabular Q-learning over the observed
// (intent, turn) pair. All of them report the same MetricsSeries schema.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hcirl/env.hpp"
#include "hcirl/errors.hpp"
#include "hcirl/metrics.hpp"
#include "hcirl/policy.hpp"
#include "hcirl/rng.hpp"
#include "hcirl/trainer.hpp"

namespace hcirl {

enum class AgentKind { ours, raw_q, qlearn, random };

inline std::string to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::ours: return "ours";
    case AgentKind::raw_q: return "raw_q";
    case AgentKind::qlearn: return "qlearn";
    case AgentKind::random: return "random";
  }
  return "unknown";
}

inline AgentKind parse_agent_kind(std::string_view name) {
  if (name == "ours") return AgentKind::ours;
  if (name == "raw_q") return AgentKind::raw_q;
  if (name == "qlearn") return AgentKind::qlearn;
  if (name == "random") return AgentKind::random;
  throw ValidationError("unknown agent '" + std::string(name) +
                        "' (expected ours, raw_q, qlearn or random)");
}

inline ActionId random_agent_act(int num_actions, RandomStream& rng) {
  return ActionId{static_cast<int>(rng.below(static_cast<std::uint64_t>(num_actions)))};
}

/// Index of the observed intent in an environment observation.
inline int observed_intent(const StateVec& s, int num_intents) {
  for (int i = 0; i < num_intents; ++i) {
    if (s.features.at(static_cast<std::size_t>(i)) == 1.0) return i;
  }
  throw ValidationError("observation carries no intent");
}

/// Q(observed intent, turn, action), row-major in that order.
struct QTable {
  int num_intents = 0;
  int horizon = 0;
  int num_actions = 0;
  double alpha = 0.1;
  double gamma = 0.99;
  std::vector<double> q;
  std::vector<std::size_t> visits;  // updates per (intent, turn)

  QTable() = default;
  QTable(int intents, int turns, int actions, double learning_rate, double discount)
      : num_intents(intents),
        horizon(turns),
        num_actions(actions),
        alpha(learning_rate),
        gamma(discount),
        q(static_cast<std::size_t>(intents * turns * actions), 0.0),
        visits(static_cast<std::size_t>(intents * turns), 0) {}

  std::size_t index(int intent, int turn, int action) const {
    if (intent < 0 || intent >= num_intents || turn < 0 || turn >= horizon || action < 0 ||
        action >= num_actions) {
      throw IndexError("Q-table index out of range");
    }
    return static_cast<std::size_t>((intent * horizon + turn) * num_actions + action);
  }

  double at(int intent, int turn, int action) const { return q[index(intent, turn, action)]; }

  std::span<const double> row(int intent, int turn) const {
    return std::span<const double>(q).subspan(index(intent, turn, 0),
                                              static_cast<std::size_t>(num_actions));
  }

  ActionId greedy(int intent, int turn) const { return greedy_action(row(intent, turn)); }

  /// One-step Q-learning backup towards r + gamma * max_a' Q(s', a').
  void update(int intent, int turn, ActionId action, double reward, int next_intent,
              int next_turn, bool done) {
    double target = reward;
    if (!done) {
      const auto next = row(next_intent, next_turn);
      target += gamma * *std::max_element(next.begin(), next.end());
    }
    double& cell = q[index(intent, turn, action.index)];
    cell += alpha * (target - cell);
    ++visits[static_cast<std::size_t>(intent * horizon + turn)];
  }
};

/// Free-function form of QTable::update returning the updated table.
inline QTable q_update(QTable table, int obs_intent, int turn, ActionId action, double reward,
                       int next_obs, int next_turn, bool done) {
  table.update(obs_intent, turn, action, reward, next_obs, next_turn, done);
  return table;
}

struct QLearningResult {
  TrainResult run;
  QTable table;
};

/// Tabular Q-learning with the same exploration schedule, batch size and
/// iteration budget as the policy-gradient trainer. Episodes run serially
/// because every update feeds the next action choice.
inline QLearningResult run_qlearning(const EnvConfig& env_config, const TrainConfig& config) {
  config.validate();
  const ScriptedUserEnv env(env_config);
  const int K = env_config.num_intents;
  QTable table(K, env_config.horizon, env_config.num_actions, config.q_learning_rate, config.gamma);
  TrainResult result;
  for (std::size_t k = 0; k < config.max_iterations; ++k) {
    const double eps = epsilon_at(config.schedule, k);
    double total = 0.0;
    std::size_t successes = 0;
    for (std::size_t j = 0; j < config.batch_size; ++j) {
      RandomStream env_rng = derive_stream(config.seed, k, j, "env");
      RandomStream agent_rng = derive_stream(config.seed, k, j, "agent");
      auto [ep, obs] = env.reset(env_rng);
      while (true) {
        const int intent = observed_intent(obs, K);
        std::vector<double> greedy_dist(static_cast<std::size_t>(env_config.num_actions), 0.0);
        greedy_dist[static_cast<std::size_t>(table.greedy(intent, obs.turn).index)] = 1.0;
        const ActionId a = sample_action(greedy_dist, eps, agent_rng);
        const StepOutcome next = env.step(ep, a, env_rng);
        total += next.reward;
        const int next_intent = observed_intent(next.observation, K);
        table.update(intent, obs.turn, a, next.reward, next_intent,
                     std::min(next.episode.turn, env_config.horizon - 1), next.done);
        if (next.done) {
          if (next.success) ++successes;
          break;
        }
        ep = next.episode;
        obs = next.observation;
      }
    }
    const auto n = static_cast<double>(config.batch_size);
    result.training.push_back({k, total / n, static_cast<double>(successes) / n, 0.0, 0.0});
    const EvalResult eval = evaluate_agent(env, config.n_eval, config.seed, 0,
                                           [&](const StateVec& s, RandomStream&) {
                                             return table.greedy(observed_intent(s, K), s.turn);
                                           });
    result.metrics.push_back(make_record(k, eval, eps, (k + 1) * config.batch_size));
  }
  if (config.max_iterations > 0) {
    result.convergence_iteration =
        detect_convergence(result.metrics, config.convergence_window, config.convergence_tol);
  }
  return {std::move(result), std::move(table)};
}

/// Uniform-random agent. Evaluation draws fresh actions every iteration.
inline TrainResult run_random(const EnvConfig& env_config, const TrainConfig& config) {
  config.validate();
  const ScriptedUserEnv env(env_config);
  const int A = env_config.num_actions;
  const auto act = [A](const StateVec&, RandomStream& rng) { return random_agent_act(A, rng); };
  TrainResult result;
  for (std::size_t k = 0; k < config.max_iterations; ++k) {
    double total = 0.0;
    std::size_t successes = 0;
    for (std::size_t j = 0; j < config.batch_size; ++j) {
      RandomStream env_rng = derive_stream(config.seed, k, j, "env");
      RandomStream agent_rng = derive_stream(config.seed, k, j, "agent");
      const Trajectory traj = env.rollout(act, env_rng, agent_rng);
      for (const auto& t : traj.transitions) total += t.reward;
      if (traj.success) ++successes;
    }
    const auto n = static_cast<double>(config.batch_size);
    result.training.push_back({k, total / n, static_cast<double>(successes) / n, 0.0, 0.0});
    const EvalResult eval = evaluate_agent(env, config.n_eval, config.seed, k, act);
    result.metrics.push_back(make_record(k, eval, 1.0, (k + 1) * config.batch_size));
  }
  if (config.max_iterations > 0) {
    result.convergence_iteration =
        detect_convergence(result.metrics, config.convergence_window, config.convergence_tol);
  }
  return result;
}

/// Runs any agent kind and returns the common result record.
inline TrainResult run_baseline(AgentKind kind, const EnvConfig& env_config,
                                const TrainConfig& config, const TrainOptions& options = {}) {
  switch (kind) {
    case AgentKind::ours: {
      TrainConfig c = config;
      c.advantage_mode = AdvantageMode::advantage;
      return train(env_config, c, options);
    }
    case AgentKind::raw_q: {
      TrainConfig c = config;
      c.advantage_mode = AdvantageMode::raw_q;
      return train(env_config, c, options);
    }
    case AgentKind::qlearn: return run_qlearning(env_config, config).run;
    case AgentKind::random: return run_random(env_config, config);
  }
  throw ValidationError("unknown agent kind");
}

}  // namespace hcirl
