#include "usac/agent.hpp"

#include <cmath>
#include <string>

#include "usac/errors.hpp"

namespace usac::agent {

void AgentConfig::validate() const {
  if (state_dim <= 0 || action_dim <= 0) throw ConfigError("agent: state/action dimensions must be positive");
  if (action_low.size() != action_dim || action_high.size() != action_dim)
    throw ConfigError("agent: action bounds must have action_dim entries");
  for (int h : hidden)
    if (h <= 0) throw ConfigError("agent: hidden widths must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("agent: gamma must lie in [0, 1)");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("agent: tau must lie in (0, 1)");
  if (batch_size == 0) throw ConfigError("agent: batch size must be positive");
  actor_optimizer.validate();
  critic_optimizer.validate();
  alpha_optimizer.validate();
  if (!(initial_alpha > 0.0)) throw ConfigError("agent: initial alpha must be positive");
  if (!(critic_output_scale > 0.0)) throw ConfigError("agent: critic output scale must be positive");
}

namespace {

std::vector<int> critic_dims(const AgentConfig& c) {
  std::vector<int> dims{c.state_dim + c.action_dim};
  dims.insert(dims.end(), c.hidden.begin(), c.hidden.end());
  dims.push_back(1);
  return dims;
}

policy::SquashedGaussianPolicy make_actor(const AgentConfig& c, Rng& rng) {
  c.validate();
  return policy::SquashedGaussianPolicy::create(c.state_dim, c.hidden, c.action_low, c.action_high, rng);
}

Eigen::MatrixXd joint(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) {
  Eigen::MatrixXd x(states.rows() + actions.rows(), states.cols());
  x.topRows(states.rows()) = states;
  x.bottomRows(actions.rows()) = actions;
  return x;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DivergenceError(std::string("non-finite ") + what);
}

struct RuleAggregator {
  const utility::AggregationRule* rule;
  utility::Aggregate operator()(double q1, double q2) const { return rule->evaluate(q1, q2); }
};

struct HardMin {
  utility::Aggregate operator()(double q1, double q2) const {
    if (q1 < q2) return {q1, 1.0, 0.0};
    if (q2 < q1) return {q2, 0.0, 1.0};
    return {q1, 0.5, 0.5};
  }
};

}  // namespace

UsacAgent::UsacAgent(AgentConfig config, Rng& init_rng)
    : config_(std::move(config)),
      actor_(make_actor(config_, init_rng)),
      critics_{nn::Mlp::uniform_fan_in(critic_dims(config_), init_rng, config_.critic_output_scale),
               nn::Mlp::uniform_fan_in(critic_dims(config_), init_rng, config_.critic_output_scale)},
      targets_{critics_[0], critics_[1]},
      temperature_(config_.initial_alpha, config_.target_entropy.value_or(-static_cast<double>(config_.action_dim)),
                   config_.alpha_optimizer, config_.auto_alpha),
      actor_opt_(nn::AdamState::for_params(actor_.net().params(), config_.actor_optimizer)),
      critic_opt_{nn::AdamState::for_params(critics_[0].params(), config_.critic_optimizer),
                  nn::AdamState::for_params(critics_[1].params(), config_.critic_optimizer)} {}

Eigen::VectorXd UsacAgent::act(const Eigen::VectorXd& state, Rng& rng) const {
  return actor_.sample(Eigen::MatrixXd(state), rng).action.col(0);
}

Eigen::VectorXd UsacAgent::act_deterministic(const Eigen::VectorXd& state) const {
  return actor_.mean_action(Eigen::MatrixXd(state)).col(0);
}

template <typename Agg>
Eigen::RowVectorXd UsacAgent::critic_target_with(const Batch& batch, const Eigen::MatrixXd& next_noise,
                                                 Agg agg) const {
  if (batch.size() == 0) throw ContractError("critic_target: empty batch");
  const policy::PolicySample next = actor_.sample(batch.next_states, next_noise);
  const Eigen::MatrixXd x = joint(batch.next_states, next.action);
  const Eigen::MatrixXd q1 = targets_[0].forward(x);
  const Eigen::MatrixXd q2 = targets_[1].forward(x);
  const double alpha = temperature_.alpha();
  Eigen::RowVectorXd y(batch.size());
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const double soft_value = agg(q1(0, i), q2(0, i)).value - alpha * next.log_prob(i);
    y(i) = batch.rewards(i) + (1.0 - batch.terminals(i)) * config_.gamma * soft_value;
  }
  return y;
}

Eigen::RowVectorXd UsacAgent::critic_target(const Batch& batch, const Eigen::MatrixXd& next_noise) const {
  return critic_target_with(batch, next_noise, RuleAggregator{&config_.critic_rule});
}

CriticGradients UsacAgent::critic_gradients(const Batch& batch, const Eigen::RowVectorXd& targets) const {
  if (targets.size() != batch.size()) throw ContractError("critic_gradients: one target per batch item");
  const Eigen::MatrixXd x = joint(batch.states, batch.actions);
  const double n = static_cast<double>(batch.size());
  CriticGradients out;
  for (int k = 0; k < 2; ++k) {
    nn::Tape tape;
    const Eigen::MatrixXd q = critics_[static_cast<std::size_t>(k)].forward(x, tape);
    const Eigen::RowVectorXd err = q.row(0) - targets;
    const double loss = err.squaredNorm() / n;
    require_finite(loss, "critic loss");
    nn::Parameters g = critics_[static_cast<std::size_t>(k)].backward(tape, (2.0 / n) * err);
    if (k == 0) {
      out.losses.critic1 = loss;
      out.critic1 = std::move(g);
    } else {
      out.losses.critic2 = loss;
      out.critic2 = std::move(g);
    }
  }
  return out;
}

CriticLosses UsacAgent::critic_update(const Batch& batch, const Eigen::RowVectorXd& targets) {
  CriticGradients g = critic_gradients(batch, targets);
  nn::adam_step(critics_[0], g.critic1, critic_opt_[0]);
  nn::adam_step(critics_[1], g.critic2, critic_opt_[1]);
  return g.losses;
}

template <typename Agg>
ActorStep UsacAgent::actor_gradient_with(const Eigen::MatrixXd& states, const Eigen::MatrixXd& noise, Agg agg,
                                         nn::Parameters* grads) const {
  const Eigen::Index n = states.cols();
  if (n == 0) throw ContractError("actor update: empty batch");
  const policy::PolicySample s = actor_.sample(states, noise);
  const Eigen::MatrixXd x = joint(states, s.action);
  std::array<nn::Tape, 2> tapes;
  const Eigen::MatrixXd q1 = critics_[0].forward(x, tapes[0]);
  const Eigen::MatrixXd q2 = critics_[1].forward(x, tapes[1]);
  const double alpha = temperature_.alpha();
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::MatrixXd dq1(1, n), dq2(1, n);
  double objective = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const utility::Aggregate a = agg(q1(0, i), q2(0, i));
    objective += a.value - alpha * s.log_prob(i);
    // loss = -objective
    dq1(0, i) = -a.d_q1 * inv_n;
    dq2(0, i) = -a.d_q2 * inv_n;
  }
  objective *= inv_n;
  require_finite(objective, "actor objective");

  if (grads != nullptr) {
    const Eigen::MatrixXd dx = critics_[0].input_gradient(tapes[0], dq1) + critics_[1].input_gradient(tapes[1], dq2);
    const Eigen::MatrixXd d_action = dx.bottomRows(config_.action_dim);
    const Eigen::RowVectorXd d_log_prob = Eigen::RowVectorXd::Constant(n, alpha * inv_n);
    *grads = actor_.backward(s, d_action, d_log_prob);
  }
  return {objective, s.log_prob};
}

double UsacAgent::actor_objective(const Eigen::MatrixXd& states, const Eigen::MatrixXd& noise) const {
  return actor_gradient_with(states, noise, RuleAggregator{&config_.actor_rule}, nullptr).objective;
}

nn::Parameters UsacAgent::actor_loss_gradient(const Eigen::MatrixXd& states, const Eigen::MatrixXd& noise) const {
  nn::Parameters g;
  actor_gradient_with(states, noise, RuleAggregator{&config_.actor_rule}, &g);
  return g;
}

ActorStep UsacAgent::actor_update(const Eigen::MatrixXd& states, const Eigen::MatrixXd& noise) {
  nn::Parameters g;
  ActorStep step = actor_gradient_with(states, noise, RuleAggregator{&config_.actor_rule}, &g);
  nn::adam_step(actor_.net(), g, actor_opt_);
  return step;
}

void UsacAgent::update_targets() {
  nn::polyak_update(targets_[0], critics_[0], config_.tau);
  nn::polyak_update(targets_[1], critics_[1], config_.tau);
}

template <typename Agg>
StepMetrics UsacAgent::step_with(const ReplayBuffer& buffer, Rng& rng, Agg critic_agg, Agg actor_agg) {
  const Batch batch = buffer.sample(config_.batch_size, rng);
  const auto n = batch.size();
  const Eigen::MatrixXd next_noise = rng.normal_matrix(config_.action_dim, n);
  const Eigen::MatrixXd actor_noise = rng.normal_matrix(config_.action_dim, n);

  StepMetrics m;
  const Eigen::RowVectorXd y = critic_target_with(batch, next_noise, critic_agg);

  CriticGradients cg = critic_gradients(batch, y);
  nn::adam_step(critics_[0], cg.critic1, critic_opt_[0]);
  nn::adam_step(critics_[1], cg.critic2, critic_opt_[1]);
  m.critic_losses = cg.losses;

  nn::Parameters ag;
  const ActorStep as = actor_gradient_with(batch.states, actor_noise, actor_agg, &ag);
  nn::adam_step(actor_.net(), ag, actor_opt_);
  m.actor_objective = as.objective;
  m.mean_log_prob = as.log_probs.mean();

  temperature_.update(as.log_probs);
  update_targets();
  m.alpha = temperature_.alpha();
  return m;
}

StepMetrics UsacAgent::training_step(const ReplayBuffer& buffer, Rng& rng) {
  return step_with(buffer, rng, RuleAggregator{&config_.critic_rule}, RuleAggregator{&config_.actor_rule});
}

StepMetrics UsacAgent::reference_sac_step(const ReplayBuffer& buffer, Rng& rng) {
  return step_with(buffer, rng, HardMin{}, HardMin{});
}

Eigen::RowVectorXd UsacAgent::value_estimate(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const {
  const Eigen::MatrixXd x = joint(states, actions);
  const Eigen::MatrixXd q1 = critics_[0].forward(x);
  const Eigen::MatrixXd q2 = critics_[1].forward(x);
  Eigen::RowVectorXd v(states.cols());
  for (Eigen::Index i = 0; i < states.cols(); ++i) v(i) = config_.actor_rule(q1(0, i), q2(0, i));
  return v;
}

Checkpoint UsacAgent::save_state() const {
  Checkpoint cp;
  cp.put_params("actor", actor_.net().params());
  cp.put_params("critic1", critics_[0].params());
  cp.put_params("critic2", critics_[1].params());
  cp.put_params("target1", targets_[0].params());
  cp.put_params("target2", targets_[1].params());
  cp.put_adam("actor_opt", actor_opt_);
  cp.put_adam("critic1_opt", critic_opt_[0]);
  cp.put_adam("critic2_opt", critic_opt_[1]);
  cp.put_real("temperature/log_alpha", temperature_.log_alpha());
  cp.put_scalar_adam("temperature/opt", temperature_.optimizer_state());
  return cp;
}

void UsacAgent::load_state(const Checkpoint& cp) {
  auto load_net = [&](nn::Mlp& net, const std::string& key) {
    nn::Parameters p = cp.params(key);
    if (!p.same_shape(net.params())) throw ContractError("checkpoint: '" + key + "' has a different architecture");
    net.mutable_params() = std::move(p);
  };
  auto load_opt = [&](nn::AdamState& opt, const std::string& key) {
    nn::AdamState s = cp.adam(key);
    if (!s.first_moment.same_shape(opt.first_moment) || !s.second_moment.same_shape(opt.second_moment))
      throw ContractError("checkpoint: '" + key + "' has a different architecture");
    opt = std::move(s);
  };
  load_net(actor_.net(), "actor");
  load_net(critics_[0], "critic1");
  load_net(critics_[1], "critic2");
  load_net(targets_[0], "target1");
  load_net(targets_[1], "target2");
  load_opt(actor_opt_, "actor_opt");
  load_opt(critic_opt_[0], "critic1_opt");
  load_opt(critic_opt_[1], "critic2_opt");
  temperature_.restore(cp.real("temperature/log_alpha"), cp.scalar_adam("temperature/opt"));
}

}  // namespace usac::agent
