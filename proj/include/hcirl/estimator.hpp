#pragma once

// Monte-Carlo Q estimates, a least-squares linear value baseline, and
// advantages A = Q - V.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

#include "hcirl/errors.hpp"
#include "hcirl/mdp.hpp"

namespace hcirl {

struct ValueParams {
  std::vector<double> w;

  double value(const StateVec& s) const {
    if (s.features.size() != w.size()) throw ValidationError("value weights/state size mismatch");
    double v = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) v += w[i] * s.features[i];
    return v;
  }
};

struct EstimatedStep {
  StateVec state;
  ActionId action;
  double q_hat = 0.0;
  double v_hat = 0.0;
  double advantage = 0.0;
  std::size_t episode = 0;
  /// Scales grad log pi(a|s) into grad log mu(a|s) for the executed policy mu.
  double score_weight = 1.0;
};

/// Single-sample Monte-Carlo estimate of Q(s_t, a_t): the return G_t.
inline std::vector<double> monte_carlo_q(const Trajectory& traj, double gamma) {
  return per_step_returns(traj, gamma);
}

/// Flattens a batch into steps with q_hat filled, in (episode, step) order.
inline std::vector<EstimatedStep> estimate_returns(std::span<const Trajectory> batch, double gamma) {
  std::vector<EstimatedStep> steps;
  for (std::size_t e = 0; e < batch.size(); ++e) {
    const auto q = monte_carlo_q(batch[e], gamma);
    for (std::size_t t = 0; t < q.size(); ++t) {
      const auto& tr = batch[e].transitions[t];
      steps.push_back({tr.state, tr.action, q[t], 0.0, 0.0, e, 1.0});
    }
  }
  return steps;
}

/// Ridge regression of q_hat onto state features via the normal equations
/// (X^T X + ridge I) w = X^T q.
inline ValueParams fit_baseline(std::span<const EstimatedStep> batch, double ridge) {
  if (batch.empty()) throw ValidationError("cannot fit a baseline to an empty batch");
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw ValidationError("ridge must be non-negative");
  const auto d = static_cast<Eigen::Index>(batch.front().state.features.size());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  for (const auto& step : batch) {
    if (static_cast<Eigen::Index>(step.state.features.size()) != d) {
      throw ValidationError("inconsistent feature dimension in batch");
    }
    const Eigen::Map<const Eigen::VectorXd> x(step.state.features.data(), d);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
    rhs += step.q_hat * x;
  }
  gram = gram.selfadjointView<Eigen::Lower>();
  gram.diagonal().array() += ridge;

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success) {
    throw NumericError("baseline normal equations could not be factored");
  }
  if (ridge == 0.0) {
    const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
    if (pivots.minCoeff() <= 1e-12 * std::max(1.0, pivots.maxCoeff())) {
      throw NumericError("baseline normal equations are singular; use a positive ridge");
    }
  }
  const Eigen::VectorXd w = ldlt.solve(rhs);
  if (!w.allFinite()) throw NumericError("baseline solve produced non-finite weights");
  return ValueParams{std::vector<double>(w.data(), w.data() + d)};
}

/// Fills v_hat and advantage = q_hat - v_hat for every step.
inline void compute_advantages(std::span<EstimatedStep> batch, const ValueParams& value) {
  for (auto& step : batch) {
    step.v_hat = value.value(step.state);
    step.advantage = step.q_hat - step.v_hat;
  }
}

}  // namespace hcirl
