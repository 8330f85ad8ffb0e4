#include "usac/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "usac/errors.hpp"

namespace usac::envs {

void ContinuousEnv::set_physical_state(const Eigen::VectorXd& state) {
  assign_state(state);
  elapsed_ = 0;
}

void ContinuousEnv::set_elapsed_steps(int n) {
  if (n < 0 || n > max_episode_steps()) throw ContractError("elapsed steps outside [0, max_episode_steps]");
  elapsed_ = n;
}

Eigen::VectorXd ContinuousEnv::reset(Rng& rng) {
  sample_initial_state(rng);
  elapsed_ = 0;
  return observation();
}

StepResult ContinuousEnv::step(const Eigen::VectorXd& action, Rng& rng) {
  if (action.size() != action_dim()) throw ContractError(id() + ": action has the wrong dimension");
  const Eigen::VectorXd lo = action_low();
  const Eigen::VectorXd hi = action_high();
  const Eigen::VectorXd clipped = action.cwiseMax(lo).cwiseMin(hi);
  StepResult r;
  r.action_clipped = (clipped.array() != action.array()).any();
  const Transition t = advance(clipped, rng);
  ++elapsed_;
  r.observation = observation();
  r.reward = t.reward;
  r.terminal = t.terminal;
  r.truncated = !t.terminal && elapsed_ >= max_episode_steps();
  return r;
}

double Pendulum::max_cost() {
  return std::numbers::pi * std::numbers::pi + 0.1 * kMaxSpeed * kMaxSpeed + 0.001 * kMaxTorque * kMaxTorque;
}

double Pendulum::wrap_angle(double theta) {
  const double two_pi = 2.0 * std::numbers::pi;
  double t = std::fmod(theta + std::numbers::pi, two_pi);
  if (t < 0.0) t += two_pi;
  return t - std::numbers::pi;
}

double Pendulum::cost(double theta, double omega, double torque) {
  const double th = wrap_angle(theta);
  return th * th + 0.1 * omega * omega + 0.001 * torque * torque;
}

Eigen::VectorXd Pendulum::physical_state() const { return Eigen::Vector2d(theta_, omega_); }

Eigen::VectorXd Pendulum::observation() const {
  return Eigen::Vector3d(std::cos(theta_), std::sin(theta_), omega_);
}

void Pendulum::sample_initial_state(Rng& rng) {
  theta_ = rng.uniform(-std::numbers::pi, std::numbers::pi);
  omega_ = rng.uniform(-1.0, 1.0);
}

void Pendulum::assign_state(const Eigen::VectorXd& state) {
  if (state.size() != 2) throw ContractError("pendulum: physical state is (theta, omega)");
  theta_ = state(0);
  omega_ = state(1);
}

ContinuousEnv::Transition Pendulum::advance(const Eigen::VectorXd& action, Rng&) {
  const double u = action(0);
  const double c = cost(theta_, omega_, u);
  const double accel = 3.0 * kGravity / (2.0 * kLength) * std::sin(theta_) + 3.0 / (kMass * kLength * kLength) * u;
  omega_ = std::clamp(omega_ + accel * kDt, -kMaxSpeed, kMaxSpeed);
  theta_ = theta_ + omega_ * kDt;
  return {reward_transform().apply(-c), false};
}

double PointMass::cost(double x, double v, double u) {
  return kPositionWeight * x * x + kVelocityWeight * v * v + kControlWeight * u * u;
}

PointMass::Lqr PointMass::lqr() {
  Lqr m;
  m.a << 1.0, kDt, 0.0, 1.0;
  m.b << 0.0, kDt;
  m.state_cost << kPositionWeight, 0.0, 0.0, kVelocityWeight;
  m.control_cost = kControlWeight;
  return m;
}

Eigen::VectorXd PointMass::physical_state() const { return Eigen::Vector2d(x_, v_); }

void PointMass::sample_initial_state(Rng& rng) {
  x_ = rng.uniform(-1.0, 1.0);
  v_ = rng.uniform(-0.5, 0.5);
}

void PointMass::assign_state(const Eigen::VectorXd& state) {
  if (state.size() != 2) throw ContractError("pointmass: physical state is (x, v)");
  x_ = state(0);
  v_ = state(1);
}

ContinuousEnv::Transition PointMass::advance(const Eigen::VectorXd& action, Rng&) {
  const double u = action(0);
  const double c = std::min(cost(x_, v_, u), kMaxCost);
  x_ = x_ + kDt * v_;
  v_ = v_ + kDt * u;
  return {reward_transform().apply(-c), false};
}

namespace {
const std::vector<std::string> kNative{"pendulum", "pointmass"};
const std::vector<std::string> kExternal{"Ant-v4", "HalfCheetah-v4", "Hopper-v4", "Humanoid-v4", "Walker2d-v4"};
}  // namespace

bool is_native_env(const std::string& id) { return std::find(kNative.begin(), kNative.end(), id) != kNative.end(); }

bool is_known_env(const std::string& id) {
  return is_native_env(id) || std::find(kExternal.begin(), kExternal.end(), id) != kExternal.end();
}

std::vector<std::string> native_env_ids() { return kNative; }

std::unique_ptr<ContinuousEnv> make_env(const std::string& id) {
  if (id == "pendulum") return std::make_unique<Pendulum>();
  if (id == "pointmass") return std::make_unique<PointMass>();
  if (is_known_env(id)) throw ConfigError("environment '" + id + "' is recognized but not simulated natively");
  throw ConfigError("unknown environment '" + id + "'");
}

int discounted_horizon(double gamma, double reward_bound, double tolerance) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("discounted_horizon: gamma must lie in [0, 1)");
  if (!(reward_bound > 0.0) || !(tolerance > 0.0)) throw ConfigError("discounted_horizon: bounds must be positive");
  if (gamma == 0.0 || reward_bound < tolerance) return 1;
  int h = static_cast<int>(std::ceil(std::log(tolerance / reward_bound) / std::log(gamma)));
  while (std::pow(gamma, h) * reward_bound >= tolerance) ++h;
  return std::max(h, 1);
}

MonteCarloEstimate monte_carlo_return(const ContinuousEnv& env, const ActionSampler& sampler,
                                      const Eigen::VectorXd& state, const Eigen::VectorXd& action, double gamma,
                                      int horizon, int n_rollouts, Rng& rng) {
  if (horizon < 1 || n_rollouts < 1) throw ContractError("monte_carlo_return: horizon and rollouts must be >= 1");
  std::vector<std::unique_ptr<ContinuousEnv>> runs;
  runs.reserve(static_cast<std::size_t>(n_rollouts));
  for (int k = 0; k < n_rollouts; ++k) {
    runs.push_back(env.clone());
    runs.back()->set_physical_state(state);
  }
  std::vector<double> returns(static_cast<std::size_t>(n_rollouts), 0.0);
  std::vector<bool> alive(static_cast<std::size_t>(n_rollouts), true);

  double discount = 1.0;
  Eigen::MatrixXd actions = action.replicate(1, n_rollouts);
  for (int t = 0; t < horizon; ++t) {
    Eigen::MatrixXd obs = Eigen::MatrixXd::Zero(env.observation_dim(), n_rollouts);
    int live = 0;
    for (int k = 0; k < n_rollouts; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      if (!alive[ku]) continue;
      const StepResult r = runs[ku]->step(actions.col(k), rng);
      returns[ku] += discount * r.reward;
      if (r.terminal) alive[ku] = false;
      obs.col(k) = r.observation;
      live += alive[ku] ? 1 : 0;
    }
    discount *= gamma;
    if (live == 0 || t + 1 == horizon) break;
    // every rollout gets a fresh action; finished ones are ignored
    actions = sampler(obs, rng);
  }

  MonteCarloEstimate est;
  for (double r : returns) est.mean += r;
  est.mean /= n_rollouts;
  if (n_rollouts > 1) {
    double ss = 0.0;
    for (double r : returns) ss += (r - est.mean) * (r - est.mean);
    est.std_error = std::sqrt(ss / (n_rollouts - 1) / n_rollouts);
  }
  return est;
}

}  // namespace usac::envs
