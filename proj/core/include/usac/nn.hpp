#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "usac/rng.hpp"

namespace usac::nn {

/// Weight matrices and bias vectors of a dense network, layer by layer.
/// The same type carries gradients and optimizer moments.
struct Parameters {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static Parameters zeros_like(const Parameters& other);
  std::size_t num_layers() const { return weights.size(); }
  std::size_t num_scalars() const;
  bool same_shape(const Parameters& other) const;
  bool all_finite() const;
};

class Mlp;

/// Activations cached by a forward pass, consumed by backward.
/// A tape is bound to the network instance and parameter version that produced it.
class Tape {
 public:
  bool empty() const { return owner_ == nullptr; }
  Eigen::Index batch_size() const { return inputs_.empty() ? 0 : inputs_.front().cols(); }

 private:
  friend class Mlp;
  const Mlp* owner_ = nullptr;
  std::uint64_t version_ = 0;
  std::vector<Eigen::MatrixXd> inputs_;  // input to each layer
  std::vector<Eigen::MatrixXd> pre_;     // hidden pre-activations
};

/// Fully connected network with ReLU hidden layers and a linear output.
/// Inputs and outputs are column batches: (features x batch).
class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialized network with the given layer widths (input, hidden..., output).
  explicit Mlp(std::vector<int> layer_dims);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias; the
  /// output layer is additionally multiplied by `output_scale`.
  static Mlp uniform_fan_in(std::vector<int> layer_dims, Rng& rng, double output_scale = 1.0);

  const std::vector<int>& layer_dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  std::size_t num_layers() const { return params_.num_layers(); }

  const Parameters& params() const { return params_; }
  /// Mutable access; invalidates every tape recorded so far.
  Parameters& mutable_params() {
    ++version_;
    return params_;
  }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Tape& tape) const;

  /// Gradients of sum(output_grad .* output) with respect to all parameters.
  /// If `input_grad` is non-null it receives the gradient with respect to the input.
  Parameters backward(const Tape& tape, const Eigen::MatrixXd& output_grad,
                      Eigen::MatrixXd* input_grad = nullptr) const;

  /// Input gradient only; skips the parameter-gradient products.
  Eigen::MatrixXd input_gradient(const Tape& tape, const Eigen::MatrixXd& output_grad) const;

 private:
  void check_tape(const Tape& tape, const Eigen::MatrixXd& output_grad) const;
  template <bool WithParams>
  void backprop(const Tape& tape, const Eigen::MatrixXd& output_grad, Parameters* grads,
                Eigen::MatrixXd* input_grad) const;

  std::vector<int> dims_;
  Parameters params_;
  std::uint64_t version_ = 0;
};

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct AdamState {
  AdamConfig config;
  Parameters first_moment;
  Parameters second_moment;
  std::int64_t step_count = 0;

  static AdamState for_params(const Parameters& params, const AdamConfig& config);
};

/// Bias-corrected Adam update. Throws NonFiniteGradientError naming the first
/// layer holding a NaN/Inf gradient; parameters are untouched in that case.
void adam_step(Parameters& params, const Parameters& grads, AdamState& state);
void adam_step(Mlp& net, const Parameters& grads, AdamState& state);

/// Adam for a single trainable scalar.
struct ScalarAdamState {
  AdamConfig config;
  double first_moment = 0.0;
  double second_moment = 0.0;
  std::int64_t step_count = 0;
};
double adam_step(double param, double grad, ScalarAdamState& state);

/// target <- tau * online + (1 - tau) * target, tau in (0, 1).
void polyak_update(Parameters& target, const Parameters& online, double tau);
void polyak_update(Mlp& target, const Mlp& online, double tau);

}  // namespace usac::nn
