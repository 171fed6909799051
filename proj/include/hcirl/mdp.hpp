#pragma once

// Core MDP data model: observed states, actions, transitions, trajectories and
// discounted-return arithmetic. Also a small tabular MDP used to check the
// estimators against exhaustive enumeration.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcirl/errors.hpp"
#include "hcirl/rng.hpp"

namespace hcirl {

/// Observed state. The last feature is always the constant bias 1.0.
struct StateVec {
  std::vector<double> features;
  int turn = 0;

  std::size_t dim() const noexcept { return features.size(); }
  bool operator==(const StateVec&) const = default;
};

struct ActionId {
  int index = 0;

  constexpr auto operator<=>(const ActionId&) const = default;
};

struct Transition {
  StateVec state;
  ActionId action;
  double reward = 0.0;
  bool done = false;

  bool operator==(const Transition&) const = default;
};

struct Trajectory {
  std::vector<Transition> transitions;
  bool success = false;

  std::size_t size() const noexcept { return transitions.size(); }
  bool operator==(const Trajectory&) const = default;

  std::vector<double> rewards() const {
    std::vector<double> out;
    out.reserve(transitions.size());
    for (const auto& t : transitions) out.push_back(t.reward);
    return out;
  }
};

inline void validate_state(const StateVec& s, std::size_t expected_dim) {
  if (s.features.size() != expected_dim) {
    throw ValidationError("state has " + std::to_string(s.features.size()) +
                          " features, expected " + std::to_string(expected_dim));
  }
  if (s.features.empty() || s.features.back() != 1.0) {
    throw ValidationError("state is missing the trailing bias feature");
  }
  for (const double f : s.features) {
    if (!std::isfinite(f)) throw ValidationError("state feature is not finite");
  }
}

/// Checks the trajectory invariants; `horizon` bounds the length when given.
inline void validate_trajectory(const Trajectory& traj, std::optional<std::size_t> horizon = {}) {
  if (traj.transitions.empty()) throw ValidationError("trajectory is empty");
  if (horizon && traj.transitions.size() > *horizon) {
    throw ValidationError("trajectory length " + std::to_string(traj.transitions.size()) +
                          " exceeds horizon " + std::to_string(*horizon));
  }
  for (std::size_t i = 0; i < traj.transitions.size(); ++i) {
    const auto& t = traj.transitions[i];
    const bool last = i + 1 == traj.transitions.size();
    if (t.done != last) {
      throw ValidationError("transition " + std::to_string(i) +
                            (last ? " is last but not done" : " is done before the end"));
    }
    if (!std::isfinite(t.reward)) {
      throw ValidationError("transition " + std::to_string(i) + " has a non-finite reward");
    }
  }
}

inline void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ValidationError("discount factor must lie in [0, 1], got " + std::to_string(gamma));
  }
}

/// G_t = sum_k gamma^k r[t+k] to the end of the sequence.
inline double discounted_return(std::span<const double> rewards, double gamma, std::size_t t) {
  check_gamma(gamma);
  if (t >= rewards.size()) {
    throw IndexError("start index " + std::to_string(t) + " out of range for " +
                     std::to_string(rewards.size()) + " rewards");
  }
  double total = 0.0;
  double weight = 1.0;
  for (std::size_t k = t; k < rewards.size(); ++k) {
    if (!std::isfinite(rewards[k])) throw ValidationError("non-finite reward");
    total += weight * rewards[k];
    weight *= gamma;
  }
  return total;
}

/// Returns [G_0, ..., G_{L-1}] via G_t = r_t + gamma * G_{t+1}.
inline std::vector<double> per_step_returns(std::span<const double> rewards, double gamma) {
  check_gamma(gamma);
  std::vector<double> out(rewards.size());
  double next = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    if (!std::isfinite(rewards[i])) throw ValidationError("non-finite reward");
    next = rewards[i] + gamma * next;
    out[i] = next;
  }
  return out;
}

inline std::vector<double> per_step_returns(const Trajectory& traj, double gamma) {
  validate_trajectory(traj);
  const auto r = traj.rewards();
  return per_step_returns(r, gamma);
}

/// A finite MDP (S, A, P, R, gamma) with a fixed horizon. Rewards are
/// deterministic functions of (state, action); transitions are stochastic.
/// Observations are one-hot(state) followed by the bias feature.
class TabularMdp {
 public:
  TabularMdp(int num_states, int num_actions, int horizon, std::vector<double> initial,
             std::vector<double> transition, std::vector<double> reward)
      : num_states_(num_states),
        num_actions_(num_actions),
        horizon_(horizon),
        initial_(std::move(initial)),
        transition_(std::move(transition)),
        reward_(std::move(reward)) {
    if (num_states < 1 || num_actions < 1 || horizon < 1) {
      throw ValidationError("tabular MDP needs at least one state, action and step");
    }
    const auto s = static_cast<std::size_t>(num_states);
    const auto a = static_cast<std::size_t>(num_actions);
    if (initial_.size() != s || transition_.size() != s * a * s || reward_.size() != s * a) {
      throw ValidationError("tabular MDP table sizes do not match its dimensions");
    }
    check_simplex(initial_);
    for (std::size_t row = 0; row < s * a; ++row) {
      check_simplex(std::span<const double>(transition_).subspan(row * s, s));
    }
  }

  int num_states() const noexcept { return num_states_; }
  int num_actions() const noexcept { return num_actions_; }
  int horizon() const noexcept { return horizon_; }
  std::size_t feature_dim() const noexcept { return static_cast<std::size_t>(num_states_) + 1; }

  double initial(int s) const { return initial_.at(static_cast<std::size_t>(s)); }
  double transition(int s, int a, int next) const {
    return transition_.at(index(s, a) * static_cast<std::size_t>(num_states_) +
                          static_cast<std::size_t>(next));
  }
  double reward(int s, int a) const { return reward_.at(index(s, a)); }

  StateVec observe(int s, int turn) const {
    StateVec out{std::vector<double>(feature_dim(), 0.0), turn};
    out.features[static_cast<std::size_t>(s)] = 1.0;
    out.features.back() = 1.0;
    return out;
  }

  int sample_initial(RandomStream& rng) const { return sample(initial_, rng); }

  int sample_next(int s, int a, RandomStream& rng) const {
    const auto n = static_cast<std::size_t>(num_states_);
    return sample(std::span<const double>(transition_).subspan(index(s, a) * n, n), rng);
  }

  /// Rolls out one full-horizon episode. `act(state_index, observation, rng)`
  /// returns the action.
  template <typename Actor>
  Trajectory rollout(Actor&& act, RandomStream& rng) const {
    Trajectory traj;
    int s = sample_initial(rng);
    for (int t = 0; t < horizon_; ++t) {
      StateVec obs = observe(s, t);
      const ActionId a = act(s, obs, rng);
      const double r = reward(s, a.index);
      traj.transitions.push_back({std::move(obs), a, r, t + 1 == horizon_});
      if (t + 1 < horizon_) s = sample_next(s, a.index, rng);
    }
    return traj;
  }

 private:
  std::size_t index(int s, int a) const {
    if (s < 0 || s >= num_states_ || a < 0 || a >= num_actions_) {
      throw IndexError("state/action index out of range");
    }
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(num_actions_) +
           static_cast<std::size_t>(a);
  }

  static void check_simplex(std::span<const double> p) {
    double total = 0.0;
    for (const double v : p) {
      if (!(v >= 0.0)) throw ValidationError("probabilities must be non-negative");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ValidationError("probabilities must sum to 1");
  }

  static int sample(std::span<const double> p, RandomStream& rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    int last_positive = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] > 0.0) last_positive = static_cast<int>(i);
      cum += p[i];
      if (u < cum) return static_cast<int>(i);
    }
    return last_positive;
  }

  int num_states_;
  int num_actions_;
  int horizon_;
  std::vector<double> initial_;
  std::vector<double> transition_;
  std::vector<double> reward_;
};

}  // namespace hcirl
