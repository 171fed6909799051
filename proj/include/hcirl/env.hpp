#pragma once

// Scripted-user interaction environment.
//
// Each episode draws a latent user intent from a (possibly skewed) intent
// distribution. On every turn the agent sees a noisy reading of the intent
// plus the turn index and must pick the response the user expects. The
// expected response is fixed per environment instance by `target_action`:
// every turn is either intent-driven (the right response depends on the
// intent) or a protocol turn (one response regardless of intent, e.g. a
// greeting or confirmation). Reaching `success_threshold` correct responses
// completes the task and ends the episode with a bonus.
//
// The reward scheme (correct / incorrect / completion bonus) is a stand-in
// for user-experience feedback; it is not calibrated against real users.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hcirl/errors.hpp"
#include "hcirl/mdp.hpp"
#include "hcirl/rng.hpp"

namespace hcirl {

struct EnvConfig {
  int num_intents = 6;
  int num_actions = 4;
  int horizon = 10;
  double noise_prob = 0.1;
  double reward_noise_sigma = 0.1;
  double imbalance_skew = 0.0;
  double reward_correct = 1.0;
  double reward_incorrect = -0.2;
  double success_bonus = 5.0;
  int success_threshold = 8;
  std::uint64_t env_seed = 0;

  /// One-hot observed intent, one-hot turn, bias.
  std::size_t feature_dim() const noexcept {
    return static_cast<std::size_t>(num_intents + horizon + 1);
  }

  void validate() const {
    if (num_intents < 2) throw ValidationError("num_intents must be at least 2");
    if (num_actions < 2) throw ValidationError("num_actions must be at least 2");
    if (horizon < 1) throw ValidationError("horizon must be at least 1");
    if (success_threshold < 1 || success_threshold > horizon) {
      throw ValidationError("success_threshold must lie in [1, horizon]");
    }
    if (!(noise_prob >= 0.0 && noise_prob <= 1.0)) {
      throw ValidationError("noise_prob must lie in [0, 1]");
    }
    if (!(reward_noise_sigma >= 0.0) || !std::isfinite(reward_noise_sigma)) {
      throw ValidationError("reward_noise_sigma must be a non-negative finite number");
    }
    if (!(imbalance_skew >= 0.0) || !std::isfinite(imbalance_skew)) {
      throw ValidationError("imbalance_skew must be a non-negative finite number");
    }
    if (!std::isfinite(reward_correct) || !std::isfinite(reward_incorrect) ||
        !std::isfinite(success_bonus)) {
      throw ValidationError("reward constants must be finite");
    }
  }

  /// Largest episode total with zero reward noise.
  double max_episode_reward() const noexcept {
    return success_threshold * reward_correct + success_bonus;
  }

  bool operator==(const EnvConfig&) const = default;
};

/// p_i proportional to (i+1)^-skew.
inline std::vector<double> intent_distribution(int num_intents, double skew) {
  if (num_intents < 2) throw ValidationError("intent distribution needs at least 2 intents");
  if (!(skew >= 0.0)) throw ValidationError("imbalance skew must be non-negative");
  std::vector<double> p(static_cast<std::size_t>(num_intents));
  double total = 0.0;
  for (int i = 0; i < num_intents; ++i) {
    p[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(i + 1), -skew);
    total += p[static_cast<std::size_t>(i)];
  }
  for (double& v : p) v /= total;
  return p;
}

inline bool is_intent_turn(int turn, std::uint64_t env_seed) noexcept {
  const std::uint64_t h = mix64(mix64(env_seed ^ fnv1a64("turn-kind")) + static_cast<std::uint64_t>(turn));
  return (h >> 63) != 0;
}

/// Ground-truth response for (intent, turn). Deterministic in its inputs;
/// each entry is uniform over actions across environment seeds.
inline ActionId target_action(int true_intent, int turn, std::uint64_t env_seed, int num_actions) {
  std::uint64_t h;
  if (is_intent_turn(turn, env_seed)) {
    h = mix64(mix64(env_seed ^ fnv1a64("intent-response")) + static_cast<std::uint64_t>(true_intent));
  } else {
    h = mix64(mix64(env_seed ^ fnv1a64("protocol-response")) + static_cast<std::uint64_t>(turn));
  }
  const auto pick = static_cast<unsigned __int128>(h) * static_cast<std::uint64_t>(num_actions);
  return ActionId{static_cast<int>(pick >> 64)};
}

/// With probability p replaces the intent by a uniform draw over all intents
/// (which may coincide with the true one).
inline int corrupt_observation(int true_intent, double p, int num_intents, RandomStream& rng) {
  if (rng.uniform() < p) return static_cast<int>(rng.below(static_cast<std::uint64_t>(num_intents)));
  return true_intent;
}

/// Hidden episode state. The agent only ever sees StateVec observations.
struct EpisodeState {
  int true_intent = 0;
  int turn = 0;
  int correct_count = 0;
  bool done = false;
};

struct StepOutcome {
  EpisodeState episode;
  StateVec observation;
  double reward = 0.0;
  bool done = false;
  bool success = false;
};

class ScriptedUserEnv {
 public:
  explicit ScriptedUserEnv(EnvConfig config) : config_(std::move(config)) {
    config_.validate();
    intent_cdf_ = intent_distribution(config_.num_intents, config_.imbalance_skew);
    for (std::size_t i = 1; i < intent_cdf_.size(); ++i) intent_cdf_[i] += intent_cdf_[i - 1];
    targets_.resize(static_cast<std::size_t>(config_.num_intents * config_.horizon));
    for (int i = 0; i < config_.num_intents; ++i) {
      for (int t = 0; t < config_.horizon; ++t) {
        targets_[static_cast<std::size_t>(i * config_.horizon + t)] =
            target_action(i, t, config_.env_seed, config_.num_actions);
      }
    }
  }

  const EnvConfig& config() const noexcept { return config_; }
  std::size_t feature_dim() const noexcept { return config_.feature_dim(); }
  int num_actions() const noexcept { return config_.num_actions; }

  ActionId target(int intent, int turn) const {
    return targets_.at(static_cast<std::size_t>(intent * config_.horizon + turn));
  }

  /// Observation encoding; turns at or past the horizon set no turn bit.
  StateVec encode(int observed_intent, int turn) const {
    StateVec s{std::vector<double>(feature_dim(), 0.0), turn};
    s.features[static_cast<std::size_t>(observed_intent)] = 1.0;
    if (turn < config_.horizon) s.features[static_cast<std::size_t>(config_.num_intents + turn)] = 1.0;
    s.features.back() = 1.0;
    return s;
  }

  std::pair<EpisodeState, StateVec> reset(RandomStream& rng) const {
    EpisodeState ep;
    ep.true_intent = sample_intent(rng);
    const int observed = corrupt_observation(ep.true_intent, config_.noise_prob,
                                             config_.num_intents, rng);
    return {ep, encode(observed, 0)};
  }

  StepOutcome step(const EpisodeState& ep, ActionId action, RandomStream& rng) const {
    if (ep.done) throw ContractViolation("step called on a finished episode");
    if (action.index < 0 || action.index >= config_.num_actions) {
      throw IndexError("action " + std::to_string(action.index) + " out of range");
    }
    StepOutcome out;
    out.episode = ep;
    const bool correct = action == target(ep.true_intent, ep.turn);
    double reward = correct ? config_.reward_correct : config_.reward_incorrect;
    reward += config_.reward_noise_sigma * rng.normal();
    if (correct) ++out.episode.correct_count;
    ++out.episode.turn;
    if (out.episode.correct_count >= config_.success_threshold) {
      out.success = true;
      out.done = true;
      reward += config_.success_bonus;
    } else if (out.episode.turn >= config_.horizon) {
      out.done = true;
    }
    out.episode.done = out.done;
    out.reward = reward;
    const int observed = corrupt_observation(ep.true_intent, config_.noise_prob,
                                             config_.num_intents, rng);
    out.observation = encode(observed, out.episode.turn);
    return out;
  }

  /// Runs one episode; `act(observation, rng)` chooses actions.
  template <typename Actor>
  Trajectory rollout(Actor&& act, RandomStream& env_rng, RandomStream& agent_rng) const {
    Trajectory traj;
    auto [ep, obs] = reset(env_rng);
    while (true) {
      const ActionId a = act(obs, agent_rng);
      StepOutcome next = step(ep, a, env_rng);
      traj.transitions.push_back({std::move(obs), a, next.reward, next.done});
      if (next.done) {
        traj.success = next.success;
        break;
      }
      ep = next.episode;
      obs = std::move(next.observation);
    }
    return traj;
  }

 private:
  int sample_intent(RandomStream& rng) const {
    const double u = rng.uniform();
    for (std::size_t i = 0; i < intent_cdf_.size(); ++i) {
      if (u < intent_cdf_[i]) return static_cast<int>(i);
    }
    return config_.num_intents - 1;
  }

  EnvConfig config_;
  std::vector<double> intent_cdf_;
  std::vector<ActionId> targets_;
};

}  // namespace hcirl
