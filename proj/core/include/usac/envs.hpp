#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "usac/rng.hpp"

namespace usac::envs {

struct StepResult {
  Eigen::VectorXd observation;
  double reward = 0.0;
  bool terminal = false;   // true environment termination
  bool truncated = false;  // time limit reached
  bool action_clipped = false;
};

/// reward = offset + scale · raw_reward, mapping the native reward into [0, B_r].
struct RewardTransform {
  double offset = 0.0;
  double scale = 1.0;

  double apply(double raw) const { return offset + scale * raw; }
  double invert(double shifted) const { return (shifted - offset) / scale; }
};

/// Continuous-control environment with a bounded action box.
/// Actions outside the box are clipped and flagged in the step result.
class ContinuousEnv {
 public:
  virtual ~ContinuousEnv() = default;

  virtual std::string id() const = 0;
  virtual int observation_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual Eigen::VectorXd action_low() const = 0;
  virtual Eigen::VectorXd action_high() const = 0;
  virtual int max_episode_steps() const = 0;
  /// Upper reward bound B_r; rewards lie in [0, B_r].
  virtual double reward_bound() const = 0;
  virtual RewardTransform reward_transform() const = 0;

  virtual Eigen::VectorXd physical_state() const = 0;
  /// Place the system in a state; resets the episode step counter.
  void set_physical_state(const Eigen::VectorXd& state);
  virtual Eigen::VectorXd observation() const = 0;

  Eigen::VectorXd reset(Rng& rng);
  StepResult step(const Eigen::VectorXd& action, Rng& rng);
  int elapsed_steps() const { return elapsed_; }
  /// Restores the step counter of a snapshotted episode.
  void set_elapsed_steps(int n);

  virtual std::unique_ptr<ContinuousEnv> clone() const = 0;

 protected:
  struct Transition {
    double reward;
    bool terminal;
  };
  virtual void sample_initial_state(Rng& rng) = 0;
  virtual void assign_state(const Eigen::VectorXd& state) = 0;
  /// Apply an in-box action; returns the shifted reward of (state, action).
  virtual Transition advance(const Eigen::VectorXd& action, Rng& rng) = 0;

 private:
  int elapsed_ = 0;
};

/// Torque-limited pendulum swing-up. θ = 0 is upright.
///   ω' = ω + (3g/(2l) sin θ + 3u/(m l²)) dt,  ω' clipped to ±8,  θ' = θ + ω' dt
/// Raw reward -(θ̂² + 0.1ω² + 0.001u²) with θ̂ wrapped to [-π, π), shifted to [0, 1].
class Pendulum final : public ContinuousEnv {
 public:
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr double kDt = 0.05;
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kMaxTorque = 2.0;
  static constexpr int kMaxEpisodeSteps = 200;

  /// Largest raw cost: π² + 0.1·8² + 0.001·2².
  static double max_cost();
  static double cost(double theta, double omega, double torque);
  static double wrap_angle(double theta);

  std::string id() const override { return "pendulum"; }
  int observation_dim() const override { return 3; }
  int action_dim() const override { return 1; }
  Eigen::VectorXd action_low() const override { return Eigen::VectorXd::Constant(1, -kMaxTorque); }
  Eigen::VectorXd action_high() const override { return Eigen::VectorXd::Constant(1, kMaxTorque); }
  int max_episode_steps() const override { return kMaxEpisodeSteps; }
  double reward_bound() const override { return 1.0; }
  RewardTransform reward_transform() const override { return {1.0, 1.0 / max_cost()}; }

  /// (θ, ω)
  Eigen::VectorXd physical_state() const override;
  /// (cos θ, sin θ, ω)
  Eigen::VectorXd observation() const override;
  std::unique_ptr<ContinuousEnv> clone() const override { return std::make_unique<Pendulum>(*this); }

 protected:
  void sample_initial_state(Rng& rng) override;
  void assign_state(const Eigen::VectorXd& state) override;
  Transition advance(const Eigen::VectorXd& action, Rng& rng) override;

 private:
  double theta_ = 0.0;
  double omega_ = 0.0;
};

/// Discrete-time double integrator x' = x + dt·v, v' = v + dt·u with quadratic
/// cost x² + 0.1 v² + 0.01 u². Reward 1 - min(cost, c_max)/c_max.
class PointMass final : public ContinuousEnv {
 public:
  static constexpr double kDt = 0.1;
  static constexpr double kMaxForce = 1.0;
  static constexpr double kPositionWeight = 1.0;
  static constexpr double kVelocityWeight = 0.1;
  static constexpr double kControlWeight = 0.01;
  static constexpr double kMaxCost = 4.0;
  static constexpr int kMaxEpisodeSteps = 200;

  static double cost(double x, double v, double u);

  /// Linear-quadratic description of the raw dynamics and cost.
  struct Lqr {
    Eigen::Matrix2d a;
    Eigen::Vector2d b;
    Eigen::Matrix2d state_cost;
    double control_cost;
  };
  static Lqr lqr();

  std::string id() const override { return "pointmass"; }
  int observation_dim() const override { return 2; }
  int action_dim() const override { return 1; }
  Eigen::VectorXd action_low() const override { return Eigen::VectorXd::Constant(1, -kMaxForce); }
  Eigen::VectorXd action_high() const override { return Eigen::VectorXd::Constant(1, kMaxForce); }
  int max_episode_steps() const override { return kMaxEpisodeSteps; }
  double reward_bound() const override { return 1.0; }
  RewardTransform reward_transform() const override { return {1.0, 1.0 / kMaxCost}; }

  Eigen::VectorXd physical_state() const override;
  Eigen::VectorXd observation() const override { return physical_state(); }
  std::unique_ptr<ContinuousEnv> clone() const override { return std::make_unique<PointMass>(*this); }

 protected:
  void sample_initial_state(Rng& rng) override;
  void assign_state(const Eigen::VectorXd& state) override;
  Transition advance(const Eigen::VectorXd& action, Rng& rng) override;

 private:
  double x_ = 0.0;
  double v_ = 0.0;
};

/// Ids accepted in configurations. Native ones can be simulated; the others
/// (MuJoCo task names) are recognized so that presets validate.
bool is_known_env(const std::string& id);
bool is_native_env(const std::string& id);
std::vector<std::string> native_env_ids();
/// Throws ConfigError for unknown or non-native ids.
std::unique_ptr<ContinuousEnv> make_env(const std::string& id);

/// Maps a batch of observations (obs_dim x n) to actions (action_dim x n).
using ActionSampler = std::function<Eigen::MatrixXd(const Eigen::MatrixXd& observations, Rng& rng)>;

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Smallest h with γ^h · B_r < tolerance (1 when γ = 0).
int discounted_horizon(double gamma, double reward_bound, double tolerance = 0.01);

/// Mean discounted return Σ_t γ^t r_t over `n_rollouts` rollouts that start in
/// `state`, take `action` first and then follow `sampler`, for `horizon` steps or
/// until termination. Time limits are ignored: the value being estimated is the
/// infinite-horizon one that bootstrapped critics learn.
MonteCarloEstimate monte_carlo_return(const ContinuousEnv& env, const ActionSampler& sampler,
                                      const Eigen::VectorXd& state, const Eigen::VectorXd& action, double gamma,
                                      int horizon, int n_rollouts, Rng& rng);

}  // namespace usac::envs
