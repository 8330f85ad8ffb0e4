#include "usac/nn.hpp"

#include <cmath>
#include <string>

#include "usac/errors.hpp"

namespace usac::nn {

Parameters Parameters::zeros_like(const Parameters& other) {
  Parameters p;
  p.weights.reserve(other.weights.size());
  p.biases.reserve(other.biases.size());
  for (const auto& w : other.weights) p.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& b : other.biases) p.biases.push_back(Eigen::VectorXd::Zero(b.size()));
  return p;
}

std::size_t Parameters::num_scalars() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
  for (const auto& b : biases) n += static_cast<std::size_t>(b.size());
  return n;
}

bool Parameters::same_shape(const Parameters& other) const {
  if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) return false;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i].rows() != other.weights[i].rows() || weights[i].cols() != other.weights[i].cols())
      return false;
    if (biases[i].size() != other.biases[i].size()) return false;
  }
  return true;
}

bool Parameters::all_finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

Mlp::Mlp(std::vector<int> layer_dims) : dims_(std::move(layer_dims)) {
  if (dims_.size() < 2) throw ContractError("Mlp: need at least input and output widths");
  for (int d : dims_)
    if (d <= 0) throw ContractError("Mlp: layer widths must be positive");
  for (std::size_t i = 0; i + 1 < dims_.size(); ++i) {
    params_.weights.push_back(Eigen::MatrixXd::Zero(dims_[i + 1], dims_[i]));
    params_.biases.push_back(Eigen::VectorXd::Zero(dims_[i + 1]));
  }
}

Mlp Mlp::uniform_fan_in(std::vector<int> layer_dims, Rng& rng, double output_scale) {
  Mlp net(std::move(layer_dims));
  const std::size_t last = net.num_layers() - 1;
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.dims_[i]));
    const double scale = i == last ? output_scale : 1.0;
    auto& w = net.params_.weights[i];
    auto& b = net.params_.biases[i];
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = scale * rng.uniform(-bound, bound);
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = scale * rng.uniform(-bound, bound);
  }
  return net;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) const {
  if (input.rows() != input_dim())
    throw ContractError("Mlp::forward: input has " + std::to_string(input.rows()) +
                        " rows, expected " + std::to_string(input_dim()));
  Eigen::MatrixXd x = input;
  const std::size_t last = num_layers() - 1;
  for (std::size_t i = 0; i <= last; ++i) {
    Eigen::MatrixXd z = params_.weights[i] * x;
    z.colwise() += params_.biases[i];
    if (i < last) z = z.cwiseMax(0.0);
    x = std::move(z);
  }
  return x;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, Tape& tape) const {
  if (input.rows() != input_dim())
    throw ContractError("Mlp::forward: input has " + std::to_string(input.rows()) +
                        " rows, expected " + std::to_string(input_dim()));
  const std::size_t last = num_layers() - 1;
  tape.owner_ = this;
  tape.version_ = version_;
  tape.inputs_.resize(num_layers());
  tape.pre_.resize(last);
  tape.inputs_[0] = input;
  Eigen::MatrixXd out;
  for (std::size_t i = 0; i <= last; ++i) {
    Eigen::MatrixXd z = params_.weights[i] * tape.inputs_[i];
    z.colwise() += params_.biases[i];
    if (i < last) {
      tape.inputs_[i + 1] = z.cwiseMax(0.0);
      tape.pre_[i] = std::move(z);
    } else {
      out = std::move(z);
    }
  }
  return out;
}

void Mlp::check_tape(const Tape& tape, const Eigen::MatrixXd& output_grad) const {
  if (tape.empty()) throw ContractError("Mlp::backward: no forward pass recorded on this tape");
  if (tape.owner_ != this || tape.version_ != version_)
    throw ContractError("Mlp::backward: tape is stale (network changed since forward)");
  if (output_grad.rows() != output_dim() || output_grad.cols() != tape.batch_size())
    throw ContractError("Mlp::backward: output gradient shape does not match forward output");
}

template <bool WithParams>
void Mlp::backprop(const Tape& tape, const Eigen::MatrixXd& output_grad, Parameters* grads,
                   Eigen::MatrixXd* input_grad) const {
  Eigen::MatrixXd delta = output_grad;
  for (std::size_t k = num_layers(); k-- > 0;) {
    if constexpr (WithParams) {
      grads->weights[k].noalias() = delta * tape.inputs_[k].transpose();
      grads->biases[k] = delta.rowwise().sum();
    }
    if (k == 0 && input_grad == nullptr) break;
    Eigen::MatrixXd upstream = params_.weights[k].transpose() * delta;
    if (k > 0) {
      // ReLU subgradient is 0 at exactly 0
      delta = (tape.pre_[k - 1].array() > 0.0).select(upstream, 0.0);
    } else {
      *input_grad = std::move(upstream);
    }
  }
}

Parameters Mlp::backward(const Tape& tape, const Eigen::MatrixXd& output_grad,
                         Eigen::MatrixXd* input_grad) const {
  check_tape(tape, output_grad);
  Parameters grads = Parameters::zeros_like(params_);
  backprop<true>(tape, output_grad, &grads, input_grad);
  return grads;
}

Eigen::MatrixXd Mlp::input_gradient(const Tape& tape, const Eigen::MatrixXd& output_grad) const {
  check_tape(tape, output_grad);
  Eigen::MatrixXd input_grad;
  backprop<false>(tape, output_grad, nullptr, &input_grad);
  return input_grad;
}

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("Adam: learning rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("Adam: beta1 must lie in (0,1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("Adam: beta2 must lie in (0,1)");
  if (!(epsilon > 0.0)) throw ConfigError("Adam: epsilon must be > 0");
}

AdamState AdamState::for_params(const Parameters& params, const AdamConfig& config) {
  config.validate();
  AdamState s;
  s.config = config;
  s.first_moment = Parameters::zeros_like(params);
  s.second_moment = Parameters::zeros_like(params);
  return s;
}

namespace {

struct BiasCorrection {
  double lr, beta1, beta2, eps, c1, c2;
};

BiasCorrection correction(const AdamConfig& cfg, std::int64_t step) {
  const double t = static_cast<double>(step);
  return {cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon,
          1.0 - std::pow(cfg.beta1, t), 1.0 - std::pow(cfg.beta2, t)};
}

template <typename P, typename G, typename M>
void adam_block(P& p, const G& g, M& m, M& v, const BiasCorrection& bc) {
  m = bc.beta1 * m + (1.0 - bc.beta1) * g;
  v = bc.beta2 * v + (1.0 - bc.beta2) * g.cwiseAbs2();
  p.array() -= bc.lr * (m.array() / bc.c1) / ((v.array() / bc.c2).sqrt() + bc.eps);
}

}  // namespace

void adam_step(Parameters& params, const Parameters& grads, AdamState& state) {
  if (!params.same_shape(grads)) throw ContractError("adam_step: gradient shapes do not match parameters");
  if (!params.same_shape(state.first_moment))
    throw ContractError("adam_step: optimizer state does not match parameters");
  for (std::size_t i = 0; i < grads.num_layers(); ++i)
    if (!grads.weights[i].allFinite() || !grads.biases[i].allFinite())
      throw NonFiniteGradientError(i, "adam_step: non-finite gradient in layer " + std::to_string(i));

  ++state.step_count;
  const BiasCorrection bc = correction(state.config, state.step_count);
  for (std::size_t i = 0; i < params.num_layers(); ++i) {
    adam_block(params.weights[i], grads.weights[i], state.first_moment.weights[i],
               state.second_moment.weights[i], bc);
    adam_block(params.biases[i], grads.biases[i], state.first_moment.biases[i],
               state.second_moment.biases[i], bc);
  }
}

void adam_step(Mlp& net, const Parameters& grads, AdamState& state) {
  adam_step(net.mutable_params(), grads, state);
}

double adam_step(double param, double grad, ScalarAdamState& state) {
  if (!std::isfinite(grad)) throw NonFiniteGradientError(0, "adam_step: non-finite scalar gradient");
  ++state.step_count;
  const BiasCorrection bc = correction(state.config, state.step_count);
  state.first_moment = bc.beta1 * state.first_moment + (1.0 - bc.beta1) * grad;
  state.second_moment = bc.beta2 * state.second_moment + (1.0 - bc.beta2) * grad * grad;
  return param - bc.lr * (state.first_moment / bc.c1) / (std::sqrt(state.second_moment / bc.c2) + bc.eps);
}

void polyak_update(Parameters& target, const Parameters& online, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("polyak_update: tau must lie in (0,1)");
  if (!target.same_shape(online)) throw ContractError("polyak_update: shape mismatch");
  for (std::size_t i = 0; i < target.num_layers(); ++i) {
    // written as target + tau * (online - target) so equal inputs are a fixed point
    target.weights[i] += tau * (online.weights[i] - target.weights[i]);
    target.biases[i] += tau * (online.biases[i] - target.biases[i]);
  }
}

void polyak_update(Mlp& target, const Mlp& online, double tau) {
  polyak_update(target.mutable_params(), online.params(), tau);
}

}  // namespace usac::nn
