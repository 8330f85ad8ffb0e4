#pragma once

#include <memory>

#include <Eigen/Core>

#include "usac/envs.hpp"
#include "usac/rng.hpp"

namespace usac::tabular {

/// Finite MDP ⟨S, A, p, p₀, r, γ⟩. Row s·A + a of `transition` is p(·|s, a).
struct TabularSoftMdp {
  int n_states = 0;
  int n_actions = 0;
  Eigen::MatrixXd transition;  // (S·A) x S
  Eigen::MatrixXd reward;      // S x A, entries in [0, B_r]
  double gamma = 0.9;
  Eigen::VectorXd initial;     // p₀ over S

  Eigen::Index row(int s, int a) const { return static_cast<Eigen::Index>(s) * n_actions + a; }
  double reward_bound() const { return reward.maxCoeff(); }
  void validate() const;

  /// Dirichlet(1) transition rows, Uniform[0, 1) rewards, Dirichlet(1) p₀.
  static TabularSoftMdp random(int n_states, int n_actions, double gamma, Rng& rng);
  /// Each (s, a) moves to a single successor drawn uniformly; random rewards.
  static TabularSoftMdp random_deterministic(int n_states, int n_actions, double gamma, Rng& rng);
};

/// π(a|s) with strictly positive entries; rows sum to one.
struct TabularPolicy {
  Eigen::MatrixXd probs;  // S x A

  void validate() const;
  static TabularPolicy uniform(int n_states, int n_actions);
  static TabularPolicy random(int n_states, int n_actions, Rng& rng);
};

using QTable = Eigen::MatrixXd;  // S x A

/// (T^π Q)(s,a) = r(s,a) + γ Σ_{s'} p(s'|s,a) Σ_{a'} π(a'|s') [Q(s',a') - α log π(a'|s')].
QTable soft_bellman_apply(const TabularSoftMdp& mdp, const TabularPolicy& pi, const QTable& q, double alpha);

struct SoftQSolution {
  QTable q;
  int iterations = 0;
  double last_change = 0.0;
};

/// Fixed-point iteration from Q = 0 until the sup-norm change drops below `tol`.
SoftQSolution solve_soft_q(const TabularSoftMdp& mdp, const TabularPolicy& pi, double alpha, double tol);

/// Normalized discounted state-action occupancy
/// ρ^π(s,a) = (1 - γ) Σ_t γ^t Pr(s_t = s, a_t = a), s_0 ~ p₀.
Eigen::MatrixXd occupancy(const TabularSoftMdp& mdp, const TabularPolicy& pi);

struct TdBoundSides {
  double lhs = 0.0;  // ‖T^π U - U‖²_ρ
  double rhs = 0.0;  // E_ρ E_{p^π} [(r + γ(U(s',a') - α log π(a'|s')) - U(s,a))²]
};

/// Both sides of the Bellman-error / squared-TD-loss inequality, computed exactly.
TdBoundSides td_bound_check(const TabularSoftMdp& mdp, const TabularPolicy& pi, double alpha, const QTable& u);

/// The MDP as a ContinuousEnv: observation and physical state are the state
/// index, the action is a real rounded to the nearest action index.
class TabularEnv final : public envs::ContinuousEnv {
 public:
  explicit TabularEnv(TabularSoftMdp mdp, int max_episode_steps = 1000);

  std::string id() const override { return "tabular"; }
  int observation_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  Eigen::VectorXd action_low() const override;
  Eigen::VectorXd action_high() const override;
  int max_episode_steps() const override { return max_steps_; }
  double reward_bound() const override { return mdp_.reward_bound(); }
  envs::RewardTransform reward_transform() const override { return {}; }
  Eigen::VectorXd physical_state() const override { return Eigen::VectorXd::Constant(1, state_); }
  Eigen::VectorXd observation() const override { return physical_state(); }
  std::unique_ptr<ContinuousEnv> clone() const override { return std::make_unique<TabularEnv>(*this); }

  const TabularSoftMdp& mdp() const { return mdp_; }

 protected:
  void sample_initial_state(Rng& rng) override;
  void assign_state(const Eigen::VectorXd& state) override;
  Transition advance(const Eigen::VectorXd& action, Rng& rng) override;

 private:
  TabularSoftMdp mdp_;
  int max_steps_;
  int state_ = 0;
};

/// Draws an index from a discrete distribution given as a vector of probabilities.
int sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& probs, Rng& rng);

/// Action sampler following π on TabularEnv observations.
envs::ActionSampler tabular_sampler(const TabularPolicy& pi);

}  // namespace usac::tabular
