#include <cmath>

#include <gtest/gtest.h>

#include "usac/errors.hpp"
#include "usac/tabular.hpp"
#include "usac/verify/oracles.hpp"

namespace {

using namespace usac::tabular;

TabularSoftMdp two_state_chain(double gamma) {
  // 0 <-> 1 alternation, one action, reward 0.5 in state 0 and 1 in state 1
  TabularSoftMdp m;
  m.n_states = 2;
  m.n_actions = 1;
  m.transition.resize(2, 2);
  m.transition << 0, 1, 1, 0;
  m.reward.resize(2, 1);
  m.reward << 0.5, 1.0;
  m.gamma = gamma;
  m.initial = Eigen::Vector2d(1.0, 0.0);
  return m;
}

TEST(Tabular, GeneratorsProduceValidModels) {
  usac::Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    EXPECT_NO_THROW(TabularSoftMdp::random(6, 3, 0.9, rng).validate());
    EXPECT_NO_THROW(TabularSoftMdp::random_deterministic(6, 3, 0.9, rng).validate());
    EXPECT_NO_THROW(TabularPolicy::random(6, 3, rng).validate());
  }
  auto bad = TabularSoftMdp::random(3, 2, 0.9, rng);
  bad.gamma = 1.0;
  EXPECT_THROW(bad.validate(), usac::ContractError);
  bad = TabularSoftMdp::random(3, 2, 0.9, rng);
  bad.transition(0, 0) += 0.1;
  EXPECT_THROW(bad.validate(), usac::ContractError);
  auto pi = TabularPolicy::uniform(3, 2);
  pi.probs(0, 0) = 0.0;
  pi.probs(0, 1) = 1.0;
  EXPECT_THROW(pi.validate(), usac::ContractError);
}

TEST(SoftQ, ZeroDiscountReturnsReward) {
  usac::Rng rng(2);
  const auto mdp = TabularSoftMdp::random(5, 3, 0.0, rng);
  const auto sol = solve_soft_q(mdp, TabularPolicy::random(5, 3, rng), 0.7, 1e-12);
  EXPECT_EQ(sol.q, mdp.reward);
}

TEST(SoftQ, TwoStateChainClosedForm) {
  const double g = 0.9;
  const auto sol = solve_soft_q(two_state_chain(g), TabularPolicy::uniform(2, 1), 0.3, 1e-13);
  // single action: log π = 0, so the entropy term vanishes
  EXPECT_NEAR(sol.q(0, 0), (0.5 + g * 1.0) / (1 - g * g), 1e-11);
  EXPECT_NEAR(sol.q(1, 0), (1.0 + g * 0.5) / (1 - g * g), 1e-11);
}

TEST(SoftQ, OperatorIsAGammaContraction) {
  usac::Rng rng(3);
  const auto mdp = TabularSoftMdp::random(8, 4, 0.95, rng);
  const auto pi = TabularPolicy::random(8, 4, rng);
  const auto fixed = solve_soft_q(mdp, pi, 0.2, 1e-12).q;
  QTable q = QTable::Zero(8, 4);
  const double e0 = (q - fixed).cwiseAbs().maxCoeff();
  for (int k = 1; k <= 500; ++k) {
    q = soft_bellman_apply(mdp, pi, q, 0.2);
    EXPECT_LE((q - fixed).cwiseAbs().maxCoeff(), std::pow(0.95, k) * e0 + 1e-11) << k;
  }
}

TEST(SoftQ, MatchesLinearSolveWithoutEntropy) {
  usac::Rng rng(4);
  for (int i = 0; i < 5; ++i) {
    const auto mdp = TabularSoftMdp::random(7, 3, 0.9, rng);
    const auto pi = TabularPolicy::random(7, 3, rng);
    const auto iter = solve_soft_q(mdp, pi, 0.0, 1e-12).q;
    EXPECT_LT((iter - usac::verify::policy_evaluation_solve(mdp, pi)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(SoftQ, EntropyBonusIsMonotoneInAlpha) {
  usac::Rng rng(5);
  const auto mdp = TabularSoftMdp::random(5, 3, 0.9, rng);
  const auto pi = TabularPolicy::random(5, 3, rng);
  QTable prev = solve_soft_q(mdp, pi, 0.0, 1e-12).q;
  for (double alpha : {0.1, 0.5, 1.0, 2.0}) {
    const QTable q = solve_soft_q(mdp, pi, alpha, 1e-12).q;
    EXPECT_TRUE(((q - prev).array() > 0.0).all()) << alpha;
    prev = q;
  }
}

TEST(Occupancy, IsADistributionAndMatchesSimulation) {
  usac::Rng rng(6);
  const auto mdp = TabularSoftMdp::random(4, 2, 0.8, rng);
  const auto pi = TabularPolicy::random(4, 2, rng);
  const auto rho = occupancy(mdp, pi);
  EXPECT_NEAR(rho.sum(), 1.0, 1e-12);
  EXPECT_TRUE((rho.array() > 0.0).all());
  // discounted visitation by geometric stopping
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(4, 2);
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    int s = sample_categorical(mdp.initial, rng);
    while (true) {
      const int a = sample_categorical(pi.probs.row(s).transpose(), rng);
      if (rng.uniform(0.0, 1.0) < 1.0 - mdp.gamma) {
        counts(s, a) += 1.0;
        break;
      }
      s = sample_categorical(mdp.transition.row(mdp.row(s, a)).transpose(), rng);
    }
  }
  counts /= n;
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < 2; ++a) {
      const double se = std::sqrt(rho(s, a) * (1 - rho(s, a)) / n);
      EXPECT_NEAR(counts(s, a), rho(s, a), 4.0 * se);
    }
}

TEST(TdBound, HoldsAndIsTightForDeterministicDynamics) {
  usac::Rng rng(7);
  const auto stoch = TabularSoftMdp::random(5, 3, 0.9, rng);
  const auto pi = TabularPolicy::random(5, 3, rng);
  const QTable u = rng.normal_matrix(5, 3);
  const auto sides = td_bound_check(stoch, pi, 0.2, u);
  EXPECT_LT(sides.lhs, sides.rhs);
  // deterministic transitions and a single action leave no variance in the TD target
  auto det = TabularSoftMdp::random_deterministic(5, 1, 0.9, rng);
  const auto one = TabularPolicy::uniform(5, 1);
  const QTable v = rng.normal_matrix(5, 1);
  const auto eq = td_bound_check(det, one, 0.2, v);
  EXPECT_NEAR(eq.lhs, eq.rhs, 1e-12 * std::max(1.0, eq.rhs));
}

TEST(TabularEnv, MonteCarloAgreesWithSolve) {
  usac::Rng rng(8);
  const auto mdp = TabularSoftMdp::random(4, 2, 0.8, rng);
  const auto pi = TabularPolicy::random(4, 2, rng);
  const auto q = solve_soft_q(mdp, pi, 0.0, 1e-12).q;
  TabularEnv env(mdp);
  const int horizon = usac::envs::discounted_horizon(0.8, mdp.reward_bound(), 1e-6);
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < 2; ++a) {
      const auto est = usac::envs::monte_carlo_return(env, tabular_sampler(pi), Eigen::VectorXd::Constant(1, s),
                                                      Eigen::VectorXd::Constant(1, a), 0.8, horizon, 2000, rng);
      EXPECT_NEAR(est.mean, q(s, a), 3.0 * est.std_error + 1e-6) << s << "," << a;
    }
}

TEST(TabularEnv, RoundsAndClampsActions) {
  const auto mdp = two_state_chain(0.5);
  TabularEnv env(mdp);
  usac::Rng rng(9);
  env.reset(rng);
  EXPECT_EQ(env.action_low()(0), -0.5);
  EXPECT_EQ(env.action_high()(0), 0.5);
  env.set_physical_state(Eigen::VectorXd::Constant(1, 0));
  const auto r = env.step(Eigen::VectorXd::Constant(1, 0.3), rng);
  EXPECT_EQ(r.reward, 0.5);
  EXPECT_EQ(r.observation(0), 1.0);
}

TEST(Categorical, FrequenciesMatchProbabilities) {
  usac::Rng rng(10);
  const Eigen::Vector3d p(0.2, 0.5, 0.3);
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (int i = 0; i < 100000; ++i) c(sample_categorical(p, rng)) += 1;
  EXPECT_LT((c / 100000 - p).cwiseAbs().maxCoeff(), 0.01);
}

}  // namespace
