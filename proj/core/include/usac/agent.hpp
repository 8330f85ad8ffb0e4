#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "usac/checkpoint.hpp"
#include "usac/nn.hpp"
#include "usac/policy.hpp"
#include "usac/replay_buffer.hpp"
#include "usac/rng.hpp"
#include "usac/utility.hpp"

namespace usac::agent {

struct AgentConfig {
  int state_dim = 0;
  int action_dim = 0;
  Eigen::VectorXd action_low;
  Eigen::VectorXd action_high;
  std::vector<int> hidden{256, 256};
  double gamma = 0.99;
  double tau = 5e-3;
  std::size_t batch_size = 256;
  nn::AdamConfig actor_optimizer;
  nn::AdamConfig critic_optimizer;
  nn::AdamConfig alpha_optimizer;
  utility::AggregationRule critic_rule = utility::AggregationRule::laplace(utility::kKappaMinClip);
  utility::AggregationRule actor_rule = utility::AggregationRule::laplace(utility::kKappaMinClip);
  bool auto_alpha = true;
  double initial_alpha = 1.0;
  /// Defaults to -action_dim.
  std::optional<double> target_entropy;
  /// Extra factor on the critics' output-layer initialization.
  double critic_output_scale = 0.1;

  void validate() const;
};

struct CriticLosses {
  double critic1 = 0.0;
  double critic2 = 0.0;
};

struct CriticGradients {
  CriticLosses losses;
  nn::Parameters critic1;
  nn::Parameters critic2;
};

struct ActorStep {
  double objective = 0.0;
  Eigen::RowVectorXd log_probs;
};

/// What one training step reports.
struct StepMetrics {
  CriticLosses critic_losses;
  double actor_objective = 0.0;
  double alpha = 0.0;
  double mean_log_prob = 0.0;
};

/// Twin-critic soft actor-critic whose critic target and actor objective
/// aggregate the two critics through independently chosen rules.
class UsacAgent {
 public:
  UsacAgent(AgentConfig config, Rng& init_rng);

  const AgentConfig& config() const { return config_; }
  const policy::SquashedGaussianPolicy& actor() const { return actor_; }
  policy::SquashedGaussianPolicy& actor() { return actor_; }
  const nn::Mlp& critic(int k) const { return critics_.at(static_cast<std::size_t>(k)); }
  nn::Mlp& critic(int k) { return critics_.at(static_cast<std::size_t>(k)); }
  const nn::Mlp& target_critic(int k) const { return targets_.at(static_cast<std::size_t>(k)); }
  nn::Mlp& target_critic(int k) { return targets_.at(static_cast<std::size_t>(k)); }
  const policy::EntropyTemperature& temperature() const { return temperature_; }
  double alpha() const { return temperature_.alpha(); }

  /// Stochastic action for environment interaction.
  Eigen::VectorXd act(const Eigen::VectorXd& state, Rng& rng) const;
  /// Deterministic scale·tanh(μ) + offset.
  Eigen::VectorXd act_deterministic(const Eigen::VectorXd& state) const;

  /// y = r + (1 - terminal)·γ·[aggregate(Q̄1(s',a'), Q̄2(s',a')) - α log π(a'|s')],
  /// a' = reparameterized sample at s' with the given noise.
  Eigen::RowVectorXd critic_target(const Batch& batch, const Eigen::MatrixXd& next_noise) const;

  CriticGradients critic_gradients(const Batch& batch, const Eigen::RowVectorXd& targets) const;
  /// One Adam step for each online critic toward the shared targets; returns pre-step losses.
  CriticLosses critic_update(const Batch& batch, const Eigen::RowVectorXd& targets);

  /// mean_i [aggregate(Q1(s_i,a_i), Q2(s_i,a_i)) - α log π(a_i|s_i)] with the online critics.
  double actor_objective(const Eigen::MatrixXd& states, const Eigen::MatrixXd& noise) const;
  /// Gradient of -actor_objective with respect to the policy parameters.
  nn::Parameters actor_loss_gradient(const Eigen::MatrixXd& states, const Eigen::MatrixXd& noise) const;
  /// One Adam ascent step on the actor objective; critics are left untouched.
  ActorStep actor_update(const Eigen::MatrixXd& states, const Eigen::MatrixXd& noise);

  void update_alpha(const Eigen::RowVectorXd& log_probs) { temperature_.update(log_probs); }
  void update_targets();

  /// Sample a batch, critic target, both critic updates, actor update, α update,
  /// Polyak averaging of both target critics, in that order.
  StepMetrics training_step(const ReplayBuffer& buffer, Rng& rng);

  /// The same step with min(Q1, Q2) hard-coded in place of both rules.
  /// Used to check that the SAC setting of the rules is exactly SAC.
  StepMetrics reference_sac_step(const ReplayBuffer& buffer, Rng& rng);

  /// Actor-rule aggregate of the online critics at (s, a): the agent's value estimate.
  Eigen::RowVectorXd value_estimate(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const;

  /// Networks, optimizer moments and temperature; the replay buffer is not included.
  Checkpoint save_state() const;
  void load_state(const Checkpoint& checkpoint);

 private:
  template <typename Agg>
  Eigen::RowVectorXd critic_target_with(const Batch& batch, const Eigen::MatrixXd& next_noise, Agg agg) const;
  template <typename Agg>
  ActorStep actor_gradient_with(const Eigen::MatrixXd& states, const Eigen::MatrixXd& noise, Agg agg,
                                nn::Parameters* grads) const;
  template <typename Agg>
  StepMetrics step_with(const ReplayBuffer& buffer, Rng& rng, Agg critic_agg, Agg actor_agg);

  AgentConfig config_;
  policy::SquashedGaussianPolicy actor_;
  std::array<nn::Mlp, 2> critics_;
  std::array<nn::Mlp, 2> targets_;
  policy::EntropyTemperature temperature_;
  nn::AdamState actor_opt_;
  std::array<nn::AdamState, 2> critic_opt_;
};

}  // namespace usac::agent
