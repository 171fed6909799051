#pragma once

// Policy-gradient training loop: collect a batch under the current policy
// with scheduled exploration, estimate Monte-Carlo returns, fit the value
// baseline, ascend the score-function gradient, then record a greedy
// evaluation. Convergence is measured, never used to stop early.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcirl/env.hpp"
#include "hcirl/errors.hpp"
#include "hcirl/estimator.hpp"
#include "hcirl/metrics.hpp"
#include "hcirl/parallel.hpp"
#include "hcirl/policy.hpp"
#include "hcirl/rng.hpp"

namespace hcirl {

enum class AdvantageMode { advantage, raw_q };

inline std::string to_string(AdvantageMode m) {
  return m == AdvantageMode::advantage ? "advantage" : "raw_q";
}

struct TrainConfig {
  double gamma = 0.99;
  double learning_rate = 1.0;
  std::size_t batch_size = 16;
  ExplorationSchedule schedule{};
  std::size_t max_iterations = 300;
  std::size_t convergence_window = 20;
  double convergence_tol = 0.05;
  AdvantageMode advantage_mode = AdvantageMode::advantage;
  std::uint64_t seed = 0;
  double ridge = 1e-6;
  std::size_t n_eval = kDefaultEvalEpisodes;
  double q_learning_rate = 0.1;

  void validate() const {
    check_gamma(gamma);
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      throw ValidationError("learning_rate must be positive");
    }
    if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
    schedule.validate();
    if (convergence_window < 2) throw ValidationError("convergence_window must be at least 2");
    if (max_iterations > 0 && convergence_window >= max_iterations) {
      throw ValidationError("convergence_window must be smaller than max_iterations");
    }
    if (!(convergence_tol > 0.0)) throw ValidationError("convergence_tol must be positive");
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw ValidationError("ridge must be non-negative");
    if (n_eval < 1) throw ValidationError("n_eval must be at least 1");
    if (!(q_learning_rate >= 0.0 && q_learning_rate <= 1.0)) {
      throw ValidationError("q_learning_rate must lie in [0, 1]");
    }
  }
};

struct TrainResult {
  std::optional<PolicyParams> policy;
  MetricsSeries metrics;
  std::vector<TrainingRecord> training;
  std::optional<std::size_t> convergence_iteration;

  /// Greedy evaluation of the final agent (the last metrics record).
  const MetricsRecord& final_metrics() const {
    if (metrics.empty()) throw ContractViolation("run recorded no metrics");
    return metrics.back();
  }
};

/// Thrown when an update produces non-finite numbers. Carries the last
/// finite policy so callers can save it.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(std::size_t iteration, PolicyParams checkpoint, const std::string& what)
      : NumericError("training aborted at iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration),
        checkpoint_(std::move(checkpoint)) {}

  std::size_t iteration() const noexcept { return iteration_; }
  const PolicyParams& checkpoint() const noexcept { return checkpoint_; }

 private:
  std::size_t iteration_;
  PolicyParams checkpoint_;
};

/// B episodes under pi_theta mixed with epsilon-uniform exploration. Episode j
/// uses streams (iteration, j, "env") and (iteration, j, "agent"); the output
/// is ordered by j whatever the worker count.
inline std::vector<Trajectory> collect_batch(const PolicyParams& policy, const ScriptedUserEnv& env,
                                             std::size_t batch_size, double epsilon,
                                             std::size_t iteration, std::uint64_t master_seed,
                                             std::size_t workers = 1) {
  std::vector<Trajectory> batch(batch_size);
  parallel_for(batch_size, workers, [&](std::size_t j) {
    RandomStream env_rng = derive_stream(master_seed, iteration, j, "env");
    RandomStream agent_rng = derive_stream(master_seed, iteration, j, "agent");
    batch[j] = env.rollout(
        [&](const StateVec& s, RandomStream& rng) {
          return sample_action(action_distribution(policy, s), epsilon, rng);
        },
        env_rng, agent_rng);
  });
  return batch;
}

inline double step_coefficient(const EstimatedStep& step, AdvantageMode mode) {
  return step.score_weight * (mode == AdvantageMode::advantage ? step.advantage : step.q_hat);
}

/// Actions are executed from mu = (1 - eps) pi + eps / |A|, and
/// grad log mu(a|s) = w grad log pi(a|s) with w = (1 - eps) pi(a|s) / mu(a|s).
/// Sets w on every step; eps = 0 gives w = 1 (plain on-policy REINFORCE).
inline void apply_exploration_weights(std::span<EstimatedStep> steps, const PolicyParams& policy,
                                      double epsilon) {
  const double uniform = epsilon / static_cast<double>(policy.num_actions);
  for (auto& step : steps) {
    if (epsilon == 0.0) {
      step.score_weight = 1.0;
      continue;
    }
    const double pi = action_distribution(policy, step.state)[static_cast<std::size_t>(step.action.index)];
    const double greedy_part = (1.0 - epsilon) * pi;
    step.score_weight = greedy_part / (greedy_part + uniform);
  }
}

/// Mean over all steps of grad log pi(a|s) times the step's coefficient
/// (advantage or raw return).
inline std::vector<double> batch_gradient(std::span<const EstimatedStep> steps,
                                          const PolicyParams& policy, AdvantageMode mode) {
  std::vector<double> grad(policy.theta.size(), 0.0);
  if (steps.empty()) return grad;
  for (const auto& step : steps) {
    const double c = step_coefficient(step, mode);
    if (c == 0.0) continue;
    const auto g = log_policy_gradient(policy, step.state, step.action);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += c * g[i];
  }
  const double n = static_cast<double>(steps.size());
  for (double& v : grad) v /= n;
  return grad;
}

/// Trace of the sample covariance of per-episode gradient estimates, each
/// scaled so that their mean is the batch gradient.
inline double gradient_variance(std::span<const EstimatedStep> steps, const PolicyParams& policy,
                                AdvantageMode mode, std::size_t num_episodes) {
  if (num_episodes < 2 || steps.empty()) return 0.0;
  const std::size_t p = policy.theta.size();
  std::vector<std::vector<double>> per_episode(num_episodes, std::vector<double>(p, 0.0));
  const double scale = static_cast<double>(num_episodes) / static_cast<double>(steps.size());
  for (const auto& step : steps) {
    const double c = step_coefficient(step, mode);
    if (c == 0.0) continue;
    const auto g = log_policy_gradient(policy, step.state, step.action);
    auto& acc = per_episode.at(step.episode);
    for (std::size_t i = 0; i < p; ++i) acc[i] += scale * c * g[i];
  }
  double trace = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    double mean = 0.0;
    for (const auto& e : per_episode) mean += e[i];
    mean /= static_cast<double>(num_episodes);
    double ss = 0.0;
    for (const auto& e : per_episode) ss += (e[i] - mean) * (e[i] - mean);
    trace += ss / static_cast<double>(num_episodes - 1);
  }
  return trace;
}

/// theta' = theta + lr * grad (ascent on the expected return).
inline PolicyParams gradient_step(const PolicyParams& policy, std::span<const double> grad,
                                  double learning_rate) {
  if (grad.size() != policy.theta.size()) throw ValidationError("gradient shape mismatch");
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw NumericError("non-finite gradient entry " + std::to_string(i));
    }
  }
  PolicyParams next = policy;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    next.theta[i] += learning_rate * grad[i];
    if (!std::isfinite(next.theta[i])) {
      throw NumericError("update overflowed at parameter " + std::to_string(i));
    }
  }
  return next;
}

/// Smallest t such that the W consecutive W-point moving averages starting at
/// t have spread <= delta * max(1, |mean of those averages|).
inline std::optional<std::size_t> detect_convergence(std::span<const double> series,
                                                     std::size_t window, double delta) {
  if (window < 2) throw ValidationError("convergence window must be at least 2");
  if (series.size() < window) return std::nullopt;
  std::vector<double> ma(series.size() - window + 1);
  for (std::size_t i = 0; i < ma.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < window; ++k) s += series[i + k];
    ma[i] = s / static_cast<double>(window);
  }
  if (ma.size() < window) return std::nullopt;
  for (std::size_t t = 0; t + window <= ma.size(); ++t) {
    const auto first = ma.begin() + static_cast<std::ptrdiff_t>(t);
    const auto last = first + static_cast<std::ptrdiff_t>(window);
    const auto [lo, hi] = std::minmax_element(first, last);
    double mean = 0.0;
    for (auto it = first; it != last; ++it) mean += *it;
    mean /= static_cast<double>(window);
    if (*hi - *lo <= delta * std::max(1.0, std::abs(mean))) return t;
  }
  return std::nullopt;
}

inline std::optional<std::size_t> detect_convergence(const MetricsSeries& metrics,
                                                     std::size_t window, double delta) {
  std::vector<double> series;
  series.reserve(metrics.size());
  for (const auto& m : metrics) series.push_back(m.avg_episode_reward);
  return detect_convergence(series, window, delta);
}

struct TrainOptions {
  std::size_t workers = 1;
  std::optional<PolicyParams> initial_policy;
  /// Called once per iteration with the batch and its filled estimates.
  std::function<void(std::size_t, std::span<const Trajectory>, std::span<const EstimatedStep>)>
      observer;
};

inline TrainingRecord training_record(std::size_t iteration, std::span<const Trajectory> batch,
                                      std::span<const EstimatedStep> steps,
                                      const PolicyParams& policy) {
  TrainingRecord rec;
  rec.iteration = iteration;
  double total = 0.0;
  std::size_t successes = 0;
  for (const auto& traj : batch) {
    for (const auto& t : traj.transitions) total += t.reward;
    if (traj.success) ++successes;
  }
  const auto n = static_cast<double>(batch.size());
  rec.avg_episode_reward = total / n;
  rec.success_rate = static_cast<double>(successes) / n;
  rec.grad_var_advantage = gradient_variance(steps, policy, AdvantageMode::advantage, batch.size());
  rec.grad_var_raw_q = gradient_variance(steps, policy, AdvantageMode::raw_q, batch.size());
  return rec;
}

/// Fills advantages with a baseline fitted on the other half of the batch:
/// even episodes use weights fitted on odd episodes and vice versa, so no
/// step's baseline depends on its own return. A single-episode batch falls
/// back to an in-sample fit.
inline void cross_fit_advantages(std::span<EstimatedStep> steps, std::size_t num_episodes,
                                 double ridge) {
  if (num_episodes < 2) {
    compute_advantages(steps, fit_baseline(steps, ridge));
    return;
  }
  std::vector<EstimatedStep> even;
  std::vector<EstimatedStep> odd;
  for (const auto& step : steps) (step.episode % 2 == 0 ? even : odd).push_back(step);
  const ValueParams fit_even = fit_baseline(even, ridge);
  const ValueParams fit_odd = fit_baseline(odd, ridge);
  for (auto& step : steps) {
    const ValueParams& w = step.episode % 2 == 0 ? fit_odd : fit_even;
    step.v_hat = w.value(step.state);
    step.advantage = step.q_hat - step.v_hat;
  }
}

inline TrainResult train(const EnvConfig& env_config, const TrainConfig& config,
                         const TrainOptions& options = {}) {
  config.validate();
  const ScriptedUserEnv env(env_config);
  PolicyParams policy = options.initial_policy.value_or(
      PolicyParams(env.feature_dim(), env.num_actions()));
  policy.validate();
  if (policy.dim != env.feature_dim() || policy.num_actions != env.num_actions()) {
    throw ValidationError("initial policy shape does not match the environment");
  }

  TrainResult result;
  result.metrics.reserve(config.max_iterations);
  for (std::size_t k = 0; k < config.max_iterations; ++k) {
    const double eps = epsilon_at(config.schedule, k);
    try {
      const auto batch =
          collect_batch(policy, env, config.batch_size, eps, k, config.seed, options.workers);
      auto steps = estimate_returns(batch, config.gamma);
      apply_exploration_weights(steps, policy, eps);
      cross_fit_advantages(steps, config.batch_size, config.ridge);
      const auto grad = batch_gradient(steps, policy, config.advantage_mode);
      result.training.push_back(training_record(k, batch, steps, policy));
      if (options.observer) options.observer(k, batch, steps);
      policy = gradient_step(policy, grad, config.learning_rate);
    } catch (const NumericError& e) {
      throw TrainingAborted(k, policy, e.what());
    }
    const EvalResult eval = evaluate_policy(policy, env, config.n_eval, config.seed);
    result.metrics.push_back(make_record(k, eval, eps, (k + 1) * config.batch_size));
  }
  result.policy = std::move(policy);
  if (config.max_iterations > 0) {
    result.convergence_iteration =
        detect_convergence(result.metrics, config.convergence_window, config.convergence_tol);
  }
  return result;
}

}  // namespace hcirl
