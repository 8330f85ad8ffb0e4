#include "usac/utility.hpp"

#include <cmath>
#include <numbers>

#include "usac/checkpoint.hpp"
#include "usac/errors.hpp"

namespace usac::utility {

double g(double kappa) {
  if (!(std::abs(kappa) < 1.0))
    throw DomainError("g(kappa): kappa must lie in (-1, 1), got " + format_real(kappa));
  if (std::abs(kappa) < 1e-4) {
    // series of log(1/(1-κ²))/(√2κ) around 0
    return kappa / std::numbers::sqrt2 + kappa * kappa * kappa / (2.0 * std::numbers::sqrt2);
  }
  return -std::log1p(-kappa * kappa) / (std::numbers::sqrt2 * kappa);
}

void validate_kappa(double kappa) {
  if (!std::isfinite(kappa) || std::abs(kappa) > kKappaLimit)
    throw ConfigError("kappa must lie in [-0.999999, 0.999999], got " + format_real(kappa));
}

void UtilityParams::validate() const {
  validate_kappa(kappa_critic);
  validate_kappa(kappa_actor);
}

CriticDistribution twin_stats_laplace(double q1, double q2) {
  return {0.5 * (q1 + q2), 0.5 * std::abs(q1 - q2)};
}

CriticDistribution twin_stats_top(double q1, double q2) {
  return {0.5 * (q1 + q2), std::abs(q1 - q2) / std::numbers::sqrt2};
}

double laplace_utility(const CriticDistribution& d, double kappa) { return d.mu + g(kappa) * d.sigma; }

double gaussian_utility(double mu, double sigma_sq, double lambda) {
  if (sigma_sq < 0.0) throw ContractError("gaussian_utility: negative variance");
  return mu + lambda * sigma_sq / 2.0;
}

namespace {

// κ constants quoted to six decimals stand for the exact roots of
// g(κ) = ±1 and g(κ) = ±√2.
double laplace_coefficient(double kappa) {
  constexpr double kHalfUlp6 = 5e-7;
  if (std::abs(std::abs(kappa) - (-kKappaMinClip)) <= kHalfUlp6) return kappa < 0 ? -1.0 : 1.0;
  if (std::abs(std::abs(kappa) - (-kKappaTopPessimistic)) <= kHalfUlp6)
    return kappa < 0 ? -std::numbers::sqrt2 : std::numbers::sqrt2;
  return g(kappa);
}

// μ + c·|q1 - q2|/2 rewritten as a convex-style combination of the ordered pair,
// which evaluates to exactly min(q1, q2) when c = -1.
Aggregate spread_combination(double q1, double q2, double c) {
  const double w_lo = 0.5 * (1.0 - c);
  const double w_hi = 0.5 * (1.0 + c);
  if (q1 < q2) return {w_lo * q1 + w_hi * q2, w_lo, w_hi};
  if (q2 < q1) return {w_lo * q2 + w_hi * q1, w_hi, w_lo};
  return {w_lo * q1 + w_hi * q2, 0.5, 0.5};
}

}  // namespace

AggregationRule AggregationRule::laplace(double kappa) {
  if (!(std::abs(kappa) < 1.0))
    throw DomainError("laplace rule: kappa must lie in (-1, 1), got " + format_real(kappa));
  return {Kind::LaplaceUtility, kappa, laplace_coefficient(kappa)};
}

AggregationRule AggregationRule::gaussian(double lambda) {
  if (!std::isfinite(lambda)) throw DomainError("gaussian rule: lambda must be finite");
  return {Kind::GaussianUtility, lambda, lambda};
}

AggregationRule AggregationRule::min_clip() { return {Kind::MinClip, 0.0, -1.0}; }

AggregationRule AggregationRule::top_beta(double beta) {
  if (!std::isfinite(beta)) throw DomainError("top rule: beta must be finite");
  return {Kind::TopBeta, beta, beta};
}

AggregationRule AggregationRule::mean() { return {Kind::Mean, 0.0, 0.0}; }

Aggregate AggregationRule::evaluate(double q1, double q2) const {
  switch (kind_) {
    case Kind::LaplaceUtility:
      return spread_combination(q1, q2, coefficient_);
    case Kind::Mean:
      return spread_combination(q1, q2, 0.0);
    case Kind::MinClip:
      if (q1 < q2) return {q1, 1.0, 0.0};
      if (q2 < q1) return {q2, 0.0, 1.0};
      return {q1, 0.5, 0.5};
    case Kind::TopBeta: {
      const auto d = twin_stats_top(q1, q2);
      const double s = q1 > q2 ? 1.0 : (q1 < q2 ? -1.0 : 0.0);
      const double ds = coefficient_ * s / std::numbers::sqrt2;
      return {d.mu + coefficient_ * d.sigma, 0.5 + ds, 0.5 - ds};
    }
    case Kind::GaussianUtility: {
      // population variance of the pair: (q1 - q2)² / 4
      const double diff = q1 - q2;
      const double var = 0.25 * diff * diff;
      const double dv = coefficient_ * 0.25 * diff;  // d/dq1 of λ·var/2
      return {0.5 * (q1 + q2) + coefficient_ * var / 2.0, 0.5 + dv, 0.5 - dv};
    }
  }
  throw ContractError("AggregationRule: unknown kind");
}

std::string AggregationRule::to_string() const {
  switch (kind_) {
    case Kind::LaplaceUtility:
      return "laplace:" + format_real(parameter_);
    case Kind::GaussianUtility:
      return "gaussian:" + format_real(parameter_);
    case Kind::MinClip:
      return "min";
    case Kind::TopBeta:
      return "top:" + format_real(parameter_);
    case Kind::Mean:
      return "mean";
  }
  return "?";
}

AggregationRule AggregationRule::parse(const std::string& text) {
  if (text == "min") return min_clip();
  if (text == "mean") return mean();
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("unknown aggregation rule '" + text + "'");
  const std::string name = text.substr(0, colon);
  double value = 0.0;
  try {
    value = parse_real(text.substr(colon + 1));
  } catch (const ContractError&) {
    throw ConfigError("aggregation rule '" + text + "': parameter is not a number");
  }
  try {
    if (name == "laplace") {
      validate_kappa(value);
      return laplace(value);
    }
    if (name == "gaussian") return gaussian(value);
    if (name == "top") return top_beta(value);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown aggregation rule '" + text + "'");
}

}  // namespace usac::utility
