#include <cmath>
#include <cstring>
#include <limits>

#include <gtest/gtest.h>

#include "usac/agent.hpp"
#include "usac/errors.hpp"
#include "usac/verify/oracles.hpp"

namespace {

using usac::agent::AgentConfig;
using usac::agent::UsacAgent;
using usac::utility::AggregationRule;

AgentConfig small_config(AggregationRule critic, AggregationRule actor) {
  AgentConfig c;
  c.state_dim = 3;
  c.action_dim = 2;
  c.action_low = Eigen::Vector2d(-1.0, -2.0);
  c.action_high = Eigen::Vector2d(1.0, 0.0);
  c.hidden = {16, 16};
  c.batch_size = 32;
  c.critic_rule = critic;
  c.actor_rule = actor;
  return c;
}

usac::ReplayBuffer filled_buffer(int n, usac::Rng& rng) {
  usac::ReplayBuffer buf(1000, 3, 2);
  for (int i = 0; i < n; ++i) {
    usac::Transition t;
    t.state = rng.normal_matrix(3, 1).col(0);
    t.action = Eigen::Vector2d(rng.uniform(-1, 1), rng.uniform(-2, 0));
    t.reward = rng.uniform(0, 1);
    t.next_state = rng.normal_matrix(3, 1).col(0);
    t.terminal = i % 7 == 0;
    buf.push(t);
  }
  return buf;
}

Eigen::MatrixXd joint(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) {
  Eigen::MatrixXd x(s.rows() + a.rows(), s.cols());
  x << s, a;
  return x;
}

bool same_bits(const usac::Checkpoint& a, const usac::Checkpoint& b) { return a == b; }

TEST(AgentConfig, Validation) {
  auto c = small_config(AggregationRule::min_clip(), AggregationRule::min_clip());
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.gamma = 1.0;
  EXPECT_THROW(bad.validate(), usac::ConfigError);
  bad = c;
  bad.tau = 0.0;
  EXPECT_THROW(bad.validate(), usac::ConfigError);
  bad = c;
  bad.action_low = Eigen::VectorXd::Zero(1);
  EXPECT_THROW(bad.validate(), usac::ConfigError);
  bad = c;
  bad.hidden = {16, 0};
  EXPECT_THROW(bad.validate(), usac::ConfigError);
}

TEST(Agent, TargetsStartEqualToCritics) {
  usac::Rng rng(1);
  UsacAgent agent(small_config(AggregationRule::min_clip(), AggregationRule::min_clip()), rng);
  for (int k = 0; k < 2; ++k) {
    EXPECT_EQ(agent.target_critic(k).params().weights, agent.critic(k).params().weights);
  }
  EXPECT_NE(agent.critic(0).params().weights[0], agent.critic(1).params().weights[0]);
  EXPECT_EQ(agent.temperature().target_entropy(), -2.0);
}

TEST(Agent, ActionsLieInsideTheBox) {
  usac::Rng rng(2);
  UsacAgent agent(small_config(AggregationRule::min_clip(), AggregationRule::min_clip()), rng);
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd s = rng.normal_matrix(3, 1).col(0) * 10.0;
    for (const Eigen::VectorXd a : {agent.act(s, rng), agent.act_deterministic(s)}) {
      EXPECT_GT(a(0), -1.0);
      EXPECT_LT(a(0), 1.0);
      EXPECT_GT(a(1), -2.0);
      EXPECT_LT(a(1), 0.0);
    }
  }
}

TEST(Agent, CriticTargetMatchesDefinition) {
  usac::Rng rng(3);
  const auto rule = AggregationRule::laplace(0.4);
  UsacAgent agent(small_config(rule, AggregationRule::min_clip()), rng);
  const auto buf = filled_buffer(50, rng);
  const auto batch = buf.sample(20, rng);
  const Eigen::MatrixXd noise = rng.normal_matrix(2, 20);
  const auto y = agent.critic_target(batch, noise);
  const auto next = agent.actor().sample(batch.next_states, noise);
  const Eigen::MatrixXd x = joint(batch.next_states, next.action);
  const Eigen::MatrixXd q1 = agent.target_critic(0).forward(x), q2 = agent.target_critic(1).forward(x);
  for (Eigen::Index j = 0; j < 20; ++j) {
    const double soft = rule(q1(0, j), q2(0, j)) - agent.alpha() * next.log_prob(j);
    const double expect = batch.rewards(j) + (1.0 - batch.terminals(j)) * agent.config().gamma * soft;
    EXPECT_NEAR(y(j), expect, 1e-12);
    if (batch.terminals(j) == 1.0) EXPECT_EQ(y(j), batch.rewards(j));
  }
}

TEST(Agent, CriticGradientsMatchFiniteDifferences) {
  usac::Rng rng(4);
  UsacAgent agent(small_config(AggregationRule::laplace(-0.5), AggregationRule::min_clip()), rng);
  const auto buf = filled_buffer(40, rng);
  const auto batch = buf.sample(16, rng);
  const Eigen::RowVectorXd y = agent.critic_target(batch, rng.normal_matrix(2, 16));
  const auto g = agent.critic_gradients(batch, y);
  for (int k = 0; k < 2; ++k) {
    usac::nn::Mlp probe = agent.critic(k);
    auto loss = [&](const usac::nn::Parameters& p) {
      probe.mutable_params() = p;
      return (probe.forward(joint(batch.states, batch.actions)).row(0) - y).squaredNorm() / 16.0;
    };
    const auto fd = usac::verify::finite_difference_gradient(loss, agent.critic(k).params(), 1e-5);
    EXPECT_LT(usac::verify::max_relative_error(k == 0 ? g.critic1 : g.critic2, fd, 1e-6), 1e-4);
  }
}

class ActorGradient : public ::testing::TestWithParam<double> {};

TEST_P(ActorGradient, MatchesFiniteDifferences) {
  usac::Rng rng(5);
  UsacAgent agent(small_config(AggregationRule::min_clip(), AggregationRule::laplace(GetParam())), rng);
  const Eigen::MatrixXd s = rng.normal_matrix(3, 12);
  const Eigen::MatrixXd noise = rng.normal_matrix(2, 12);
  const auto g = agent.actor_loss_gradient(s, noise);
  UsacAgent probe = agent;
  auto loss = [&](const usac::nn::Parameters& p) {
    probe.actor().net().mutable_params() = p;
    return -probe.actor_objective(s, noise);
  };
  const auto fd = usac::verify::finite_difference_gradient(loss, agent.actor().net().params(), 1e-5);
  EXPECT_LT(usac::verify::max_relative_error(g, fd, 1e-6), 1e-4);
}

INSTANTIATE_TEST_SUITE_P(Kappas, ActorGradient, ::testing::Values(-0.9, -0.5, 0.0, 0.5, 0.9));

TEST(Agent, ActorObjectiveUsesActorRule) {
  usac::Rng rng(6);
  const auto rule = AggregationRule::laplace(0.3);
  UsacAgent agent(small_config(AggregationRule::min_clip(), rule), rng);
  const Eigen::MatrixXd s = rng.normal_matrix(3, 9), noise = rng.normal_matrix(2, 9);
  const auto smp = agent.actor().sample(s, noise);
  const Eigen::MatrixXd x = joint(s, smp.action);
  const Eigen::MatrixXd q1 = agent.critic(0).forward(x), q2 = agent.critic(1).forward(x);
  double expect = 0.0;
  for (int j = 0; j < 9; ++j) expect += rule(q1(0, j), q2(0, j)) - agent.alpha() * smp.log_prob(j);
  EXPECT_NEAR(agent.actor_objective(s, noise), expect / 9.0, 1e-12);
  const auto v = agent.value_estimate(s, smp.action);
  EXPECT_NEAR(v(4), rule(q1(0, 4), q2(0, 4)), 1e-15);
}

TEST(Agent, SacSettingReproducesReferenceStepBitwise) {
  usac::Rng init_a(7), init_b(7);
  const auto sac = AggregationRule::laplace(usac::utility::kKappaMinClip);
  UsacAgent a(small_config(sac, sac), init_a);
  UsacAgent b(small_config(sac, sac), init_b);
  usac::Rng data(8);
  const auto buf = filled_buffer(200, data);
  usac::Rng ra(9), rb(9);
  for (int i = 0; i < 30; ++i) {
    const auto ma = a.training_step(buf, ra);
    const auto mb = b.reference_sac_step(buf, rb);
    ASSERT_EQ(std::memcmp(&ma.actor_objective, &mb.actor_objective, sizeof(double)), 0) << i;
  }
  EXPECT_TRUE(same_bits(a.save_state(), b.save_state()));
}

TEST(Agent, TrainingStepMovesTargetsByPolyak) {
  usac::Rng rng(10);
  UsacAgent agent(small_config(AggregationRule::min_clip(), AggregationRule::min_clip()), rng);
  const auto buf = filled_buffer(100, rng);
  const auto before = agent.target_critic(0).params();
  agent.training_step(buf, rng);
  const auto& online = agent.critic(0).params();
  const auto& after = agent.target_critic(0).params();
  const double tau = agent.config().tau;
  for (std::size_t l = 0; l < before.num_layers(); ++l) {
    const Eigen::MatrixXd expect = (1 - tau) * before.weights[l] + tau * online.weights[l];
    EXPECT_TRUE(after.weights[l].isApprox(expect, 1e-14));
  }
}

TEST(Agent, FixedTemperatureStaysFixed) {
  usac::Rng rng(11);
  auto c = small_config(AggregationRule::min_clip(), AggregationRule::min_clip());
  c.auto_alpha = false;
  c.initial_alpha = 0.2;
  UsacAgent agent(c, rng);
  const auto buf = filled_buffer(100, rng);
  for (int i = 0; i < 5; ++i) agent.training_step(buf, rng);
  EXPECT_EQ(agent.alpha(), 0.2);
}

TEST(Agent, SaveLoadRoundTrip) {
  usac::Rng rng(12);
  const auto cfg = small_config(AggregationRule::laplace(0.2), AggregationRule::gaussian(-0.3));
  UsacAgent a(cfg, rng);
  const auto buf = filled_buffer(100, rng);
  for (int i = 0; i < 5; ++i) a.training_step(buf, rng);
  usac::Rng other(99);
  UsacAgent b(cfg, other);
  b.load_state(usac::Checkpoint::parse(a.save_state().serialize()));
  EXPECT_TRUE(same_bits(a.save_state(), b.save_state()));
  usac::Rng ra(13), rb(13);
  a.training_step(buf, ra);
  b.training_step(buf, rb);
  EXPECT_TRUE(same_bits(a.save_state(), b.save_state()));
  auto wide = cfg;
  wide.hidden = {8};
  UsacAgent c(wide, other);
  EXPECT_THROW(c.load_state(a.save_state()), usac::ContractError);
}

TEST(Agent, DivergenceIsReported) {
  usac::Rng rng(14);
  UsacAgent agent(small_config(AggregationRule::min_clip(), AggregationRule::min_clip()), rng);
  auto buf = filled_buffer(10, rng);
  const auto batch = buf.sample(4, rng);
  Eigen::RowVectorXd y = Eigen::RowVectorXd::Zero(4);
  y(1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(agent.critic_gradients(batch, y), usac::DivergenceError);
  EXPECT_THROW(agent.critic_gradients(batch, Eigen::RowVectorXd::Zero(3)), usac::ContractError);
}

}  // namespace
