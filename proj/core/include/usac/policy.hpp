#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "usac/nn.hpp"
#include "usac/rng.hpp"

namespace usac::policy {

/// Everything a batched reparameterized sample needs for its backward pass.
struct PolicySample {
  Eigen::MatrixXd action;       // (d_a x n)
  Eigen::RowVectorXd log_prob;  // (1 x n)
  Eigen::MatrixXd squashed;     // tanh(pre_tanh)
  Eigen::MatrixXd std;          // exp(clamped log-std)
  Eigen::MatrixXd noise;
  Eigen::MatrixXd log_std_active;  // 1 where the log-std clamp was inactive, else 0
  nn::Tape tape;
};

/// Tanh-squashed diagonal Gaussian actor. The network maps a state to
/// 2·d_a outputs: means first, then log standard deviations.
class SquashedGaussianPolicy {
 public:
  static constexpr double kDefaultLogStdMin = -5.0;
  static constexpr double kDefaultLogStdMax = 2.0;
  /// |tanh| is capped at 1 - kSaturation so that actions stay strictly inside the box.
  static constexpr double kSaturation = 1e-12;

  SquashedGaussianPolicy(nn::Mlp net, Eigen::VectorXd action_low, Eigen::VectorXd action_high,
                         double log_std_min = kDefaultLogStdMin, double log_std_max = kDefaultLogStdMax);

  /// Fan-in initialized network state_dim -> hidden... -> 2·action_dim.
  static SquashedGaussianPolicy create(int state_dim, const std::vector<int>& hidden,
                                       const Eigen::VectorXd& action_low,
                                       const Eigen::VectorXd& action_high, Rng& rng);

  int state_dim() const { return net_.input_dim(); }
  int action_dim() const { return static_cast<int>(scale_.size()); }
  const Eigen::VectorXd& action_scale() const { return scale_; }
  const Eigen::VectorXd& action_offset() const { return offset_; }
  std::pair<double, double> log_std_bounds() const { return {log_std_min_, log_std_max_}; }

  const nn::Mlp& net() const { return net_; }
  nn::Mlp& net() { return net_; }

  /// Batched reparameterized sample a = scale·tanh(μ + σ⊙ε) + offset with its exact log-density.
  PolicySample sample(const Eigen::MatrixXd& states, const Eigen::MatrixXd& noise) const;
  PolicySample sample(const Eigen::MatrixXd& states, Rng& rng) const;

  /// Single-state convenience wrapper around sample().
  std::pair<Eigen::VectorXd, double> sample_action(const Eigen::VectorXd& state,
                                                   const Eigen::VectorXd& noise) const;

  /// scale·tanh(μ) + offset.
  Eigen::MatrixXd mean_action(const Eigen::MatrixXd& states) const;

  /// Log-density of given actions (which must lie strictly inside the box).
  Eigen::RowVectorXd log_prob(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const;

  /// Parameter gradient of a loss L(action, log_prob) given dL/daction and dL/dlog_prob.
  nn::Parameters backward(const PolicySample& sample, const Eigen::MatrixXd& grad_action,
                          const Eigen::RowVectorXd& grad_log_prob) const;

 private:
  struct Head {
    Eigen::MatrixXd mean;
    Eigen::MatrixXd log_std;
    Eigen::MatrixXd active;
  };
  Head split(const Eigen::MatrixXd& raw) const;

  nn::Mlp net_;
  Eigen::VectorXd scale_;
  Eigen::VectorXd offset_;
  double log_std_min_;
  double log_std_max_;
};

/// log(1 - tanh(u)²) computed as 2(log 2 - u - softplus(-2u)); finite for any finite u.
double log_one_minus_tanh_sq(double u);

/// Trainable entropy coefficient α = exp(log_alpha).
class EntropyTemperature {
 public:
  EntropyTemperature(double initial_alpha, double target_entropy, const nn::AdamConfig& optimizer,
                     bool trainable = true);

  double alpha() const;
  double log_alpha() const { return log_alpha_; }
  double target_entropy() const { return target_entropy_; }
  bool trainable() const { return trainable_; }
  const nn::ScalarAdamState& optimizer_state() const { return optimizer_; }

  /// One Adam step on loss = -log_alpha · mean(log_prob + target_entropy).
  /// No-op when the temperature is fixed. Returns the gradient that was applied.
  double update(const Eigen::RowVectorXd& batch_log_probs);

  void restore(double log_alpha, const nn::ScalarAdamState& optimizer) {
    log_alpha_ = log_alpha;
    optimizer_ = optimizer;
  }

 private:
  double log_alpha_;
  double target_entropy_;
  nn::ScalarAdamState optimizer_;
  bool trainable_;
};

}  // namespace usac::policy
