#pragma once

// Linear-softmax policy pi_theta(a|s) = softmax(theta^T f(s)) with an
// execution-time epsilon-uniform mixture for exploration.
//
// The score-function gradient is always taken with respect to pi_theta at
// the executed action, whether or not that step was exploratory. No
// importance correction is applied, so with epsilon > 0 the update is
// slightly biased; with epsilon = 0 it is exactly on-policy REINFORCE.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hcirl/errors.hpp"
#include "hcirl/mdp.hpp"
#include "hcirl/rng.hpp"

namespace hcirl {

/// theta has shape (dim x num_actions), stored row-major.
struct PolicyParams {
  std::size_t dim = 0;
  int num_actions = 0;
  std::vector<double> theta;

  PolicyParams() = default;
  PolicyParams(std::size_t d, int actions)
      : dim(d), num_actions(actions), theta(d * static_cast<std::size_t>(actions), 0.0) {}

  double& at(std::size_t feature, int action) {
    return theta[feature * static_cast<std::size_t>(num_actions) + static_cast<std::size_t>(action)];
  }
  double at(std::size_t feature, int action) const {
    return theta[feature * static_cast<std::size_t>(num_actions) + static_cast<std::size_t>(action)];
  }

  void validate() const {
    if (num_actions < 1) throw ValidationError("policy needs at least one action");
    if (theta.size() != dim * static_cast<std::size_t>(num_actions)) {
      throw ValidationError("policy parameter array has the wrong size");
    }
    for (const double v : theta) {
      if (!std::isfinite(v)) throw ValidationError("policy parameter is not finite");
    }
  }

  bool operator==(const PolicyParams&) const = default;
};

struct ExplorationSchedule {
  double eps0 = 0.3;
  double decay = 0.99;
  double eps_min = 0.01;

  void validate() const {
    if (!(eps0 >= 0.0 && eps0 <= 1.0)) throw ValidationError("eps0 must lie in [0, 1]");
    if (!(decay > 0.0 && decay <= 1.0)) throw ValidationError("eps_decay must lie in (0, 1]");
    if (!(eps_min >= 0.0 && eps_min <= eps0)) throw ValidationError("eps_min must lie in [0, eps0]");
  }
};

inline double epsilon_at(const ExplorationSchedule& schedule, std::size_t iteration) {
  return std::max(schedule.eps_min,
                  schedule.eps0 * std::pow(schedule.decay, static_cast<double>(iteration)));
}

inline std::vector<double> logits(const PolicyParams& params, const StateVec& state) {
  if (state.features.size() != params.dim) {
    throw ValidationError("state has " + std::to_string(state.features.size()) +
                          " features but the policy expects " + std::to_string(params.dim));
  }
  std::vector<double> z(static_cast<std::size_t>(params.num_actions), 0.0);
  for (std::size_t f = 0; f < params.dim; ++f) {
    const double x = state.features[f];
    if (x == 0.0) continue;
    for (int a = 0; a < params.num_actions; ++a) z[static_cast<std::size_t>(a)] += x * params.at(f, a);
  }
  return z;
}

/// Numerically stable softmax (max subtracted before exponentiation).
inline std::vector<double> softmax(std::span<const double> z) {
  for (const double v : z) {
    if (!std::isfinite(v)) throw NumericError("non-finite logit in softmax");
  }
  const double peak = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - peak);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

inline std::vector<double> action_distribution(const PolicyParams& params, const StateVec& state) {
  const auto z = logits(params, state);
  return softmax(z);
}

/// Index of the largest entry; ties go to the lowest index.
inline ActionId greedy_action(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return ActionId{static_cast<int>(best)};
}

/// With probability epsilon a uniform action, otherwise an inverse-CDF draw
/// from `dist` over the fixed action order.
inline ActionId sample_action(std::span<const double> dist, double epsilon, RandomStream& rng) {
  if (rng.uniform() < epsilon) {
    return ActionId{static_cast<int>(rng.below(dist.size()))};
  }
  const double u = rng.uniform();
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] > 0.0) last_positive = i;
    cum += dist[i];
    if (u < cum) return ActionId{static_cast<int>(i)};
  }
  return ActionId{static_cast<int>(last_positive)};
}

/// Gradient of log pi(action|state) w.r.t. theta: column b is
/// f(s) * (1[b == action] - pi_b). Same row-major layout as theta.
inline std::vector<double> log_policy_gradient(const PolicyParams& params, const StateVec& state,
                                               ActionId action) {
  const auto pi = action_distribution(params, state);
  std::vector<double> grad(params.theta.size(), 0.0);
  const auto A = static_cast<std::size_t>(params.num_actions);
  for (std::size_t f = 0; f < params.dim; ++f) {
    const double x = state.features[f];
    if (x == 0.0) continue;
    for (std::size_t b = 0; b < A; ++b) {
      const double indicator = static_cast<int>(b) == action.index ? 1.0 : 0.0;
      grad[f * A + b] = x * (indicator - pi[b]);
    }
  }
  return grad;
}

}  // namespace hcirl
