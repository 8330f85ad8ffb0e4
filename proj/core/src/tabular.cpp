#include "usac/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/LU>

#include "usac/errors.hpp"

namespace usac::tabular {

namespace {

Eigen::VectorXd dirichlet_ones(int n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = -std::log(1.0 - rng.uniform(0.0, 1.0));
  return v / v.sum();
}

bool rows_stochastic(const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if ((m.row(r).array() < 0.0).any()) return false;
    if (std::abs(m.row(r).sum() - 1.0) > 1e-12) return false;
  }
  return true;
}

}  // namespace

void TabularSoftMdp::validate() const {
  if (n_states <= 0 || n_actions <= 0) throw ContractError("mdp: empty state or action set");
  if (transition.rows() != static_cast<Eigen::Index>(n_states) * n_actions || transition.cols() != n_states)
    throw ContractError("mdp: transition tensor must be (S*A) x S");
  if (!rows_stochastic(transition)) throw ContractError("mdp: transition rows must be distributions");
  if (reward.rows() != n_states || reward.cols() != n_actions) throw ContractError("mdp: reward must be S x A");
  if ((reward.array() < 0.0).any()) throw ContractError("mdp: rewards must be nonnegative");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ContractError("mdp: gamma must lie in [0, 1)");
  if (initial.size() != n_states || (initial.array() < 0.0).any() || std::abs(initial.sum() - 1.0) > 1e-12)
    throw ContractError("mdp: initial distribution must be a distribution over S");
}

TabularSoftMdp TabularSoftMdp::random(int n_states, int n_actions, double gamma, Rng& rng) {
  TabularSoftMdp m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.gamma = gamma;
  m.transition.resize(static_cast<Eigen::Index>(n_states) * n_actions, n_states);
  for (Eigen::Index r = 0; r < m.transition.rows(); ++r) m.transition.row(r) = dirichlet_ones(n_states, rng);
  m.reward.resize(n_states, n_actions);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) m.reward(s, a) = rng.uniform(0.0, 1.0);
  m.initial = dirichlet_ones(n_states, rng);
  m.validate();
  return m;
}

TabularSoftMdp TabularSoftMdp::random_deterministic(int n_states, int n_actions, double gamma, Rng& rng) {
  TabularSoftMdp m = random(n_states, n_actions, gamma, rng);
  m.transition.setZero();
  for (Eigen::Index r = 0; r < m.transition.rows(); ++r)
    m.transition(r, static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n_states)))) = 1.0;
  m.validate();
  return m;
}

void TabularPolicy::validate() const {
  if (probs.size() == 0) throw ContractError("policy table is empty");
  if ((probs.array() <= 0.0).any()) throw ContractError("policy table entries must be strictly positive");
  if (!rows_stochastic(probs)) throw ContractError("policy table rows must sum to one");
}

TabularPolicy TabularPolicy::uniform(int n_states, int n_actions) {
  return {Eigen::MatrixXd::Constant(n_states, n_actions, 1.0 / n_actions)};
}

TabularPolicy TabularPolicy::random(int n_states, int n_actions, Rng& rng) {
  TabularPolicy p;
  p.probs.resize(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) p.probs.row(s) = dirichlet_ones(n_actions, rng).transpose();
  p.validate();
  return p;
}

namespace {

void check_shapes(const TabularSoftMdp& mdp, const TabularPolicy& pi, const QTable* q) {
  if (pi.probs.rows() != mdp.n_states || pi.probs.cols() != mdp.n_actions)
    throw ContractError("policy table shape does not match the MDP");
  if (q != nullptr && (q->rows() != mdp.n_states || q->cols() != mdp.n_actions))
    throw ContractError("Q table shape does not match the MDP");
}

// V(s') = Σ_a' π(a'|s') [Q(s',a') - α log π(a'|s')]
Eigen::VectorXd soft_state_value(const TabularPolicy& pi, const QTable& q, double alpha) {
  const Eigen::ArrayXXd p = pi.probs.array();
  return (p * (q.array() - alpha * p.log())).rowwise().sum().matrix();
}

}  // namespace

QTable soft_bellman_apply(const TabularSoftMdp& mdp, const TabularPolicy& pi, const QTable& q, double alpha) {
  check_shapes(mdp, pi, &q);
  const Eigen::VectorXd v = soft_state_value(pi, q, alpha);
  const Eigen::VectorXd next = mdp.transition * v;  // (S·A)
  QTable out(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) out(s, a) = mdp.reward(s, a) + mdp.gamma * next(mdp.row(s, a));
  return out;
}

SoftQSolution solve_soft_q(const TabularSoftMdp& mdp, const TabularPolicy& pi, double alpha, double tol) {
  if (!(tol > 0.0)) throw ContractError("solve_soft_q: tolerance must be positive");
  check_shapes(mdp, pi, nullptr);
  SoftQSolution sol;
  sol.q = QTable::Zero(mdp.n_states, mdp.n_actions);
  constexpr int kMaxIterations = 10'000'000;
  for (sol.iterations = 0; sol.iterations < kMaxIterations;) {
    QTable next = soft_bellman_apply(mdp, pi, sol.q, alpha);
    sol.last_change = (next - sol.q).cwiseAbs().maxCoeff();
    sol.q = std::move(next);
    ++sol.iterations;
    if (sol.last_change < tol) break;
  }
  return sol;
}

Eigen::MatrixXd occupancy(const TabularSoftMdp& mdp, const TabularPolicy& pi) {
  check_shapes(mdp, pi, nullptr);
  const int S = mdp.n_states;
  // state-to-state kernel under π
  Eigen::MatrixXd p_pi = Eigen::MatrixXd::Zero(S, S);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) p_pi.row(s) += pi.probs(s, a) * mdp.transition.row(mdp.row(s, a));
  // d = (1-γ) p₀ + γ P_πᵀ d
  const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(S, S) - mdp.gamma * p_pi.transpose();
  const Eigen::VectorXd d = lhs.partialPivLu().solve((1.0 - mdp.gamma) * mdp.initial);
  return d.asDiagonal() * pi.probs;
}

TdBoundSides td_bound_check(const TabularSoftMdp& mdp, const TabularPolicy& pi, double alpha, const QTable& u) {
  check_shapes(mdp, pi, &u);
  const Eigen::MatrixXd rho = occupancy(mdp, pi);
  const QTable tu = soft_bellman_apply(mdp, pi, u, alpha);
  const Eigen::ArrayXXd log_pi = pi.probs.array().log();
  TdBoundSides out;
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double w = rho(s, a);
      const double be = tu(s, a) - u(s, a);
      out.lhs += w * be * be;
      double expected_loss = 0.0;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        const double ps = mdp.transition(mdp.row(s, a), s2);
        if (ps == 0.0) continue;
        for (int a2 = 0; a2 < mdp.n_actions; ++a2) {
          const double td =
              mdp.reward(s, a) + mdp.gamma * (u(s2, a2) - alpha * log_pi(s2, a2)) - u(s, a);
          expected_loss += ps * pi.probs(s2, a2) * td * td;
        }
      }
      out.rhs += w * expected_loss;
    }
  }
  return out;
}

int sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& probs, Rng& rng) {
  const double u = rng.uniform(0.0, 1.0);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

TabularEnv::TabularEnv(TabularSoftMdp mdp, int max_episode_steps) : mdp_(std::move(mdp)), max_steps_(max_episode_steps) {
  mdp_.validate();
}

Eigen::VectorXd TabularEnv::action_low() const { return Eigen::VectorXd::Constant(1, -0.5); }
Eigen::VectorXd TabularEnv::action_high() const { return Eigen::VectorXd::Constant(1, mdp_.n_actions - 0.5); }

void TabularEnv::sample_initial_state(Rng& rng) { state_ = sample_categorical(mdp_.initial, rng); }

void TabularEnv::assign_state(const Eigen::VectorXd& state) {
  const auto s = static_cast<int>(std::lround(state(0)));
  if (state.size() != 1 || s < 0 || s >= mdp_.n_states) throw ContractError("tabular env: invalid state");
  state_ = s;
}

envs::ContinuousEnv::Transition TabularEnv::advance(const Eigen::VectorXd& action, Rng& rng) {
  const int a = std::clamp(static_cast<int>(std::lround(action(0))), 0, mdp_.n_actions - 1);
  const double r = mdp_.reward(state_, a);
  state_ = sample_categorical(mdp_.transition.row(mdp_.row(state_, a)).transpose(), rng);
  return {r, false};
}

envs::ActionSampler tabular_sampler(const TabularPolicy& pi) {
  return [pi](const Eigen::MatrixXd& obs, Rng& rng) {
    Eigen::MatrixXd actions(1, obs.cols());
    for (Eigen::Index j = 0; j < obs.cols(); ++j) {
      const auto s = static_cast<Eigen::Index>(std::lround(obs(0, j)));
      actions(0, j) = sample_categorical(pi.probs.row(s).transpose(), rng);
    }
    return actions;
  };
}

}  // namespace usac::tabular
