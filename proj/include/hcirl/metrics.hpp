#pragma once

// Evaluation metrics: cumulative reward over an evaluation batch, average
// episode reward, task success rate. Convergence speed is derived from the
// per-iteration series (see detect_convergence in trainer.hpp).

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hcirl/env.hpp"
#include "hcirl/errors.hpp"
#include "hcirl/policy.hpp"
#include "hcirl/rng.hpp"

namespace hcirl {

inline constexpr std::size_t kDefaultEvalEpisodes = 20;

struct EvalResult {
  double cumulative_reward = 0.0;
  double avg_episode_reward = 0.0;
  double success_rate = 0.0;
  std::size_t successes = 0;
  std::size_t episodes = 0;
};

struct MetricsRecord {
  std::size_t iteration = 0;
  double cumulative_reward = 0.0;
  double avg_episode_reward = 0.0;
  double success_rate = 0.0;
  double epsilon = 0.0;
  std::size_t episodes_seen = 0;

  bool operator==(const MetricsRecord&) const = default;
};

using MetricsSeries = std::vector<MetricsRecord>;

/// Training-batch statistics kept alongside the evaluation series.
struct TrainingRecord {
  std::size_t iteration = 0;
  double avg_episode_reward = 0.0;
  double success_rate = 0.0;
  double grad_var_advantage = 0.0;
  double grad_var_raw_q = 0.0;

  bool operator==(const TrainingRecord&) const = default;
};

/// Runs n_eval episodes. Environment streams are fixed per (seed, episode)
/// so every call sees the same users; the agent stream also carries
/// `iteration` so stochastic agents draw fresh actions each time.
template <typename Actor>
EvalResult evaluate_agent(const ScriptedUserEnv& env, std::size_t n_eval, std::uint64_t eval_seed,
                          std::size_t iteration, Actor&& act) {
  if (n_eval < 1) throw ValidationError("evaluation needs at least one episode");
  EvalResult out;
  out.episodes = n_eval;
  double sum = 0.0;
  for (std::size_t j = 0; j < n_eval; ++j) {
    RandomStream env_rng = derive_stream(eval_seed, 0, j, "eval-env");
    RandomStream agent_rng = derive_stream(eval_seed, iteration, j, "eval-agent");
    const Trajectory traj = env.rollout(act, env_rng, agent_rng);
    double total = 0.0;
    for (const auto& t : traj.transitions) total += t.reward;
    sum += total;
    if (traj.success) ++out.successes;
  }
  // Sum first, divide second; the reported cumulative is avg * n so that
  // avg * n == cumulative holds bitwise (it differs from sum by at most 1 ulp).
  out.avg_episode_reward = sum / static_cast<double>(n_eval);
  out.cumulative_reward = out.avg_episode_reward * static_cast<double>(n_eval);
  out.success_rate = static_cast<double>(out.successes) / static_cast<double>(n_eval);
  return out;
}

/// Greedy (epsilon = 0, lowest-index tie-break) evaluation of a policy.
inline EvalResult evaluate_policy(const PolicyParams& policy, const ScriptedUserEnv& env,
                                  std::size_t n_eval, std::uint64_t eval_seed) {
  return evaluate_agent(env, n_eval, eval_seed, 0, [&](const StateVec& s, RandomStream&) {
    return greedy_action(action_distribution(policy, s));
  });
}

inline EvalResult evaluate_policy(const PolicyParams& policy, const EnvConfig& config,
                                  std::size_t n_eval, std::uint64_t eval_seed) {
  return evaluate_policy(policy, ScriptedUserEnv(config), n_eval, eval_seed);
}

inline MetricsRecord make_record(std::size_t iteration, const EvalResult& eval, double epsilon,
                                 std::size_t episodes_seen) {
  return {iteration, eval.cumulative_reward, eval.avg_episode_reward, eval.success_rate, epsilon,
          episodes_seen};
}

}  // namespace hcirl
