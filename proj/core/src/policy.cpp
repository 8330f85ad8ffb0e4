#include "usac/policy.hpp"

#include <cmath>
#include <numbers>

#include "usac/errors.hpp"

namespace usac::policy {

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

double log_one_minus_tanh_sq(double u) { return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u)); }

SquashedGaussianPolicy::SquashedGaussianPolicy(nn::Mlp net, Eigen::VectorXd action_low,
                                               Eigen::VectorXd action_high, double log_std_min,
                                               double log_std_max)
    : net_(std::move(net)), log_std_min_(log_std_min), log_std_max_(log_std_max) {
  if (action_low.size() != action_high.size() || action_low.size() == 0)
    throw ContractError("policy: action bounds must be non-empty and of equal length");
  if ((action_high.array() <= action_low.array()).any())
    throw ContractError("policy: action high must exceed low in every dimension");
  if (net_.output_dim() != 2 * action_low.size())
    throw ContractError("policy: network output must be 2 x action_dim");
  if (!(log_std_min < log_std_max)) throw ContractError("policy: empty log-std clamp interval");
  scale_ = 0.5 * (action_high - action_low);
  offset_ = 0.5 * (action_high + action_low);
}

SquashedGaussianPolicy SquashedGaussianPolicy::create(int state_dim, const std::vector<int>& hidden,
                                                      const Eigen::VectorXd& action_low,
                                                      const Eigen::VectorXd& action_high, Rng& rng) {
  std::vector<int> dims{state_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(2 * static_cast<int>(action_low.size()));
  return SquashedGaussianPolicy(nn::Mlp::uniform_fan_in(dims, rng), action_low, action_high);
}

SquashedGaussianPolicy::Head SquashedGaussianPolicy::split(const Eigen::MatrixXd& raw) const {
  const Eigen::Index da = action_dim();
  Head h;
  h.mean = raw.topRows(da);
  const Eigen::MatrixXd raw_log_std = raw.bottomRows(da);
  h.log_std = raw_log_std.cwiseMax(log_std_min_).cwiseMin(log_std_max_);
  h.active = ((raw_log_std.array() >= log_std_min_) && (raw_log_std.array() <= log_std_max_))
                 .cast<double>()
                 .matrix();
  return h;
}

PolicySample SquashedGaussianPolicy::sample(const Eigen::MatrixXd& states, const Eigen::MatrixXd& noise) const {
  const Eigen::Index da = action_dim();
  if (noise.rows() != da || noise.cols() != states.cols())
    throw ContractError("policy: noise must be (action_dim x batch)");
  PolicySample s;
  const Head h = split(net_.forward(states, s.tape));
  s.noise = noise;
  s.std = h.log_std.array().exp().matrix();
  s.log_std_active = h.active;
  const Eigen::MatrixXd pre = h.mean + s.std.cwiseProduct(noise);
  const double cap = 1.0 - kSaturation;
  s.squashed = pre.array().tanh().max(-cap).min(cap).matrix();
  s.action = (s.squashed.array().colwise() * scale_.array()).colwise() + offset_.array();

  const Eigen::Index n = states.cols();
  s.log_prob.resize(n);
  const double log_scale_sum = scale_.array().log().sum();
  for (Eigen::Index j = 0; j < n; ++j) {
    double lp = -log_scale_sum;
    for (Eigen::Index i = 0; i < da; ++i) {
      const double e = noise(i, j);
      lp += -0.5 * e * e - h.log_std(i, j) - kHalfLog2Pi - log_one_minus_tanh_sq(pre(i, j));
    }
    s.log_prob(j) = lp;
  }
  return s;
}

PolicySample SquashedGaussianPolicy::sample(const Eigen::MatrixXd& states, Rng& rng) const {
  return sample(states, rng.normal_matrix(action_dim(), states.cols()));
}

std::pair<Eigen::VectorXd, double> SquashedGaussianPolicy::sample_action(const Eigen::VectorXd& state,
                                                                         const Eigen::VectorXd& noise) const {
  const PolicySample s = sample(Eigen::MatrixXd(state), Eigen::MatrixXd(noise));
  return {s.action.col(0), s.log_prob(0)};
}

Eigen::MatrixXd SquashedGaussianPolicy::mean_action(const Eigen::MatrixXd& states) const {
  const Head h = split(net_.forward(states));
  const double cap = 1.0 - kSaturation;
  const Eigen::ArrayXXd t = h.mean.array().tanh().max(-cap).min(cap);
  return ((t.colwise() * scale_.array()).colwise() + offset_.array()).matrix();
}

Eigen::RowVectorXd SquashedGaussianPolicy::log_prob(const Eigen::MatrixXd& states,
                                                    const Eigen::MatrixXd& actions) const {
  const Eigen::Index da = action_dim();
  if (actions.rows() != da || actions.cols() != states.cols())
    throw ContractError("policy: actions must be (action_dim x batch)");
  const Head h = split(net_.forward(states));
  Eigen::RowVectorXd out(states.cols());
  const double log_scale_sum = scale_.array().log().sum();
  for (Eigen::Index j = 0; j < states.cols(); ++j) {
    double lp = -log_scale_sum;
    for (Eigen::Index i = 0; i < da; ++i) {
      const double y = (actions(i, j) - offset_(i)) / scale_(i);
      if (!(std::abs(y) < 1.0)) throw ContractError("policy: action outside the open action box");
      const double u = std::atanh(y);
      const double e = (u - h.mean(i, j)) / std::exp(h.log_std(i, j));
      lp += -0.5 * e * e - h.log_std(i, j) - kHalfLog2Pi - log_one_minus_tanh_sq(u);
    }
    out(j) = lp;
  }
  return out;
}

nn::Parameters SquashedGaussianPolicy::backward(const PolicySample& s, const Eigen::MatrixXd& grad_action,
                                                const Eigen::RowVectorXd& grad_log_prob) const {
  const Eigen::Index da = action_dim();
  const Eigen::Index n = s.action.cols();
  if (grad_action.rows() != da || grad_action.cols() != n || grad_log_prob.size() != n)
    throw ContractError("policy: gradient shapes do not match the sample");
  // d log_prob / d pre_tanh = 2 tanh(u); d action / d pre_tanh = scale (1 - tanh²)
  const Eigen::ArrayXXd t = s.squashed.array();
  const Eigen::ArrayXXd d_pre = (grad_action.array().colwise() * scale_.array()) * (1.0 - t.square()) +
                                (t.rowwise() * grad_log_prob.array()) * 2.0;
  Eigen::MatrixXd head_grad(2 * da, n);
  head_grad.topRows(da) = d_pre.matrix();
  head_grad.bottomRows(da) =
      ((d_pre * s.std.array() * s.noise.array()).rowwise() - grad_log_prob.array()) * s.log_std_active.array();
  return net_.backward(s.tape, head_grad);
}

EntropyTemperature::EntropyTemperature(double initial_alpha, double target_entropy,
                                       const nn::AdamConfig& optimizer, bool trainable)
    : log_alpha_(std::log(initial_alpha)), target_entropy_(target_entropy), trainable_(trainable) {
  if (!(initial_alpha > 0.0) || !std::isfinite(initial_alpha))
    throw ConfigError("entropy temperature: alpha must be positive and finite");
  optimizer.validate();
  optimizer_.config = optimizer;
}

double EntropyTemperature::alpha() const { return std::exp(log_alpha_); }

double EntropyTemperature::update(const Eigen::RowVectorXd& batch_log_probs) {
  if (batch_log_probs.size() == 0) throw ContractError("update_alpha: empty batch");
  if (!trainable_) return 0.0;
  const double grad = -(batch_log_probs.mean() + target_entropy_);
  log_alpha_ = nn::adam_step(log_alpha_, grad, optimizer_);
  return grad;
}

}  // namespace usac::policy
