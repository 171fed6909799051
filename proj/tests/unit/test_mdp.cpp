#include <gtest/gtest.h>

#include <vector>

#include "enumerate.hpp"
#include "hcirl/mdp.hpp"
#include "hcirl/rng.hpp"

using namespace hcirl;

TEST(DiscountedReturn, Examples) {
  const std::vector<double> a{7.0, 3.0};
  EXPECT_EQ(discounted_return(a, 0.0, 0), 7.0);
  const std::vector<double> b{1, 1, 1};
  EXPECT_EQ(discounted_return(b, 1.0, 0), 3.0);
  const std::vector<double> c{1, 2, 3};
  EXPECT_DOUBLE_EQ(discounted_return(c, 0.5, 0), 1 + 0.5 * 2 + 0.25 * 3);
}

TEST(DiscountedReturn, Errors) {
  const std::vector<double> r{1, 2};
  EXPECT_THROW(discounted_return(r, 0.5, 2), IndexError);
  EXPECT_THROW(discounted_return(r, 1.5, 0), ValidationError);
  const std::vector<double> bad{1, std::nan("")};
  EXPECT_THROW(discounted_return(bad, 0.5, 0), ValidationError);
}

TEST(PerStepReturns, Examples) {
  const std::vector<double> r{1, 2, 3};
  const auto g = per_step_returns(r, 0.5);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_DOUBLE_EQ(g[0], 2.75);
  EXPECT_DOUBLE_EQ(g[1], 3.5);
  EXPECT_DOUBLE_EQ(g[2], 3.0);
  EXPECT_EQ(per_step_returns(std::vector<double>{4.5}, 0.3), std::vector<double>{4.5});
  EXPECT_EQ(per_step_returns(std::vector<double>{0, 0, 0}, 0.9), (std::vector<double>{0, 0, 0}));
}

TEST(PerStepReturns, MatchesForwardSummation) {
  RandomStream rng = derive_stream(11, 0, 0, "returns");
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t len = 1 + rng.below(50);
    const double gamma = rng.uniform();
    std::vector<double> r(len);
    for (double& x : r) x = 20.0 * rng.uniform() - 10.0;
    const auto g = per_step_returns(r, gamma);
    for (std::size_t t = 0; t < len; ++t) {
      double forward = 0.0;
      double d = 1.0;
      for (std::size_t k = t; k < len; ++k) {
        forward += d * r[k];
        d *= gamma;
      }
      ASSERT_NEAR(g[t], forward, 1e-12) << "trial " << trial << " t " << t;
    }
  }
}

TEST(PerStepReturns, MonotoneInGammaForNonNegativeRewards) {
  RandomStream rng = derive_stream(12, 0, 0, "monotone");
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r(1 + rng.below(30));
    for (double& x : r) x = 5.0 * rng.uniform();
    const double g1 = rng.uniform();
    const double g2 = g1 + (1.0 - g1) * rng.uniform();
    for (std::size_t t = 0; t < r.size(); ++t) {
      ASSERT_LE(discounted_return(r, g1, t), discounted_return(r, g2, t) + 1e-12);
    }
  }
}

TEST(Trajectory, Validation) {
  const StateVec s{{1.0, 1.0}, 0};
  Trajectory ok{{{s, {0}, 1.0, false}, {s, {1}, 0.5, true}}, false};
  EXPECT_NO_THROW(validate_trajectory(ok, 2));
  EXPECT_THROW(validate_trajectory(ok, 1), ValidationError);
  Trajectory empty;
  EXPECT_THROW(validate_trajectory(empty), ValidationError);
  Trajectory early_done{{{s, {0}, 1.0, true}, {s, {1}, 0.5, true}}, false};
  EXPECT_THROW(validate_trajectory(early_done), ValidationError);
  Trajectory no_done{{{s, {0}, 1.0, false}}, false};
  EXPECT_THROW(validate_trajectory(no_done), ValidationError);
  Trajectory bad_reward{{{s, {0}, INFINITY, true}}, false};
  EXPECT_THROW(validate_trajectory(bad_reward), ValidationError);
  EXPECT_THROW(validate_state(StateVec{{1.0, 0.0}, 0}, 2), ValidationError);  // bias must be 1
  EXPECT_THROW(validate_state(StateVec{{1.0}, 0}, 2), ValidationError);
}

TEST(TabularMdp, RejectsBadTables) {
  EXPECT_THROW(TabularMdp(2, 2, 1, {0.5, 0.4}, std::vector<double>(8, 0.5), std::vector<double>(4)),
               ValidationError);
  EXPECT_THROW(TabularMdp(2, 2, 1, {0.5, 0.5}, std::vector<double>(7, 0.5), std::vector<double>(4)),
               ValidationError);
}

TEST(TabularMdp, RolloutShapeAndDeterminism) {
  const TabularMdp mdp = hcirl::testing::small_mdp();
  const auto act = [](int, const StateVec&, RandomStream& rng) { return ActionId{static_cast<int>(rng.below(2))}; };
  RandomStream a = derive_stream(5, 0, 0, "mdp");
  RandomStream b = derive_stream(5, 0, 0, "mdp");
  const Trajectory t1 = mdp.rollout(act, a);
  const Trajectory t2 = mdp.rollout(act, b);
  EXPECT_EQ(t1, t2);
  ASSERT_EQ(t1.size(), 3u);
  EXPECT_NO_THROW(validate_trajectory(t1, 3));
  for (const auto& t : t1.transitions) EXPECT_NO_THROW(validate_state(t.state, mdp.feature_dim()));
}

// Mean Monte-Carlo G_0 conditioned on (s_0, a_0) against exhaustive enumeration.
TEST(TabularMdp, MonteCarloQMatchesEnumeration) {
  const TabularMdp mdp = hcirl::testing::small_mdp();
  const std::vector<std::vector<double>> pi{{0.3, 0.7}, {0.6, 0.4}};
  const double gamma = 0.9;
  const auto act = [&](int s, const StateVec&, RandomStream& rng) {
    return ActionId{rng.uniform() < pi[static_cast<std::size_t>(s)][0] ? 0 : 1};
  };
  double sum[2][2] = {};
  double sumsq[2][2] = {};
  int n[2][2] = {};
  for (int e = 0; e < 10000; ++e) {
    RandomStream rng = derive_stream(6, 0, static_cast<std::uint64_t>(e), "mc");
    const Trajectory traj = mdp.rollout(act, rng);
    const int s0 = traj.transitions[0].state.features[0] == 1.0 ? 0 : 1;
    const int a0 = traj.transitions[0].action.index;
    const double g = per_step_returns(traj, gamma)[0];
    sum[s0][a0] += g;
    sumsq[s0][a0] += g * g;
    ++n[s0][a0];
  }
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) {
      ASSERT_GT(n[s][a], 100);
      const double mean = sum[s][a] / n[s][a];
      const double var = sumsq[s][a] / n[s][a] - mean * mean;
      const double exact = hcirl::testing::exact_q(mdp, pi, gamma, s, a);
      EXPECT_NEAR(mean, exact, 3.0 * std::sqrt(var / n[s][a])) << "s=" << s << " a=" << a;
    }
  }
}
