#pragma once

#include <string>

namespace usac::utility {

/// Pessimism/optimism coefficient of the Laplace utility:
///   g(κ) = log(1 / (1 - κ²)) / (√2 κ),   g(0) = 0.
/// Odd, strictly increasing, diverges at κ = ±1. Throws DomainError for |κ| >= 1.
double g(double kappa);

/// Largest |κ| accepted in configurations.
inline constexpr double kKappaLimit = 0.999999;

/// Six-decimal κ constants used in the literature for g(κ) = -1 (min-clipping)
/// and g(κ) = -√2 (the pessimistic TOP setting).
inline constexpr double kKappaMinClip = -0.831559;
inline constexpr double kKappaTopPessimistic = -0.916563;

/// Summary of the two critic outputs at one (s, a).
struct CriticDistribution {
  double mu = 0.0;
  double sigma = 0.0;
};

/// μ = (q1 + q2) / 2, σ = |q1 - q2| / 2: the standard deviation of the two-point sample.
CriticDistribution twin_stats_laplace(double q1, double q2);
/// μ = (q1 + q2) / 2, σ = sqrt(Σ_k (q_k - μ)²) = |q1 - q2| / √2.
CriticDistribution twin_stats_top(double q1, double q2);

/// Closed-form exponential utility of a Laplace distribution: μ + g(κ) σ.
double laplace_utility(const CriticDistribution& d, double kappa);
/// Closed-form exponential utility of a Gaussian distribution: μ + λ σ² / 2.
double gaussian_utility(double mu, double sigma_sq, double lambda);

/// Aggregate value and its partial derivatives with respect to q1 and q2.
struct Aggregate {
  double value = 0.0;
  double d_q1 = 0.0;
  double d_q2 = 0.0;
};

/// Rule collapsing two critic values into one scalar. Covers the Laplace and
/// Gaussian utilities, min-clipping, the mean + β·σ rule, and the plain mean.
class AggregationRule {
 public:
  enum class Kind { LaplaceUtility, GaussianUtility, MinClip, TopBeta, Mean };

  /// Laplace utility with parameter κ ∈ (-1, 1). The six-decimal constants
  /// ±0.831559 and ±0.916563 denote the κ solving g(κ) = ±1 and g(κ) = ±√2;
  /// they are bound to those exact coefficients.
  static AggregationRule laplace(double kappa);
  static AggregationRule gaussian(double lambda);
  static AggregationRule min_clip();
  static AggregationRule top_beta(double beta);
  static AggregationRule mean();

  Kind kind() const { return kind_; }
  /// κ, λ or β depending on the kind; 0 for MinClip and Mean.
  double parameter() const { return parameter_; }
  /// Multiplier applied to the scale statistic (g(κ) for Laplace, β for TopBeta).
  double coefficient() const { return coefficient_; }

  double operator()(double q1, double q2) const { return evaluate(q1, q2).value; }
  /// Value plus partials. |q1 - q2| uses subgradient 0 at q1 == q2.
  Aggregate evaluate(double q1, double q2) const;

  /// Text form used in config files: "laplace:<κ>", "gaussian:<λ>", "min",
  /// "top:<β>", "mean".
  std::string to_string() const;
  static AggregationRule parse(const std::string& text);

  bool operator==(const AggregationRule& other) const {
    return kind_ == other.kind_ && parameter_ == other.parameter_;
  }

 private:
  AggregationRule(Kind kind, double parameter, double coefficient)
      : kind_(kind), parameter_(parameter), coefficient_(coefficient) {}

  Kind kind_;
  double parameter_;
  double coefficient_;
};

/// Utility parameters of one agent: one κ for the critic target, one for the actor.
struct UtilityParams {
  double kappa_critic = kKappaMinClip;
  double kappa_actor = kKappaMinClip;

  /// Throws ConfigError unless both lie within [-kKappaLimit, kKappaLimit].
  void validate() const;
};

/// Throws ConfigError if |κ| > kKappaLimit or κ is not finite.
void validate_kappa(double kappa);

}  // namespace usac::utility
