#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "usac/errors.hpp"
#include "usac/rng.hpp"
#include "usac/utility.hpp"
#include "usac/verify/oracles.hpp"

namespace {

using usac::utility::AggregationRule;
using usac::utility::g;

TEST(G, ZeroAndOdd) {
  EXPECT_EQ(g(0.0), 0.0);
  for (double k : {1e-9, 1e-5, 0.3, 0.7, 0.99, 0.999999}) EXPECT_EQ(g(-k), -g(k)) << k;
}

TEST(G, KnownValues) {
  EXPECT_NEAR(g(0.5), std::log(4.0 / 3.0) / (std::numbers::sqrt2 * 0.5), 1e-15);
  EXPECT_NEAR(g(0.5), 0.4068438885, 1e-10);
  EXPECT_NEAR(g(-0.831559), -1.0, 2e-7);
  EXPECT_NEAR(g(-0.916563), -std::numbers::sqrt2, 5e-6);
}

TEST(G, SeriesBranchIsContinuous) {
  const double k = 1e-4;
  const double below = g(std::nextafter(k, 0.0));
  const double above = g(k);
  EXPECT_NEAR(below, above, 1e-15 * above);
  // agrees with the direct formula evaluated in long double
  for (double x : {1e-7, 3e-5, 9.99e-5, 1e-3, 0.3}) {
    const long double lx = x;
    const long double direct = -std::log1p(-lx * lx) / (std::sqrt(2.0L) * lx);
    EXPECT_NEAR(g(x), static_cast<double>(direct), 4e-16 * std::abs(g(x))) << x;
  }
}

TEST(G, StrictlyIncreasingNearLimits) {
  double prev = g(-0.999999);
  for (int i = 1; i <= 1000; ++i) {
    const double k = -0.999999 + 1.999998 * i / 1000;
    const double v = g(k);
    EXPECT_GT(v, prev) << k;
    prev = v;
  }
}

TEST(G, LargeButFiniteNearOne) {
  EXPECT_NEAR(g(1.0 - 1e-6), 9.2789, 1e-3);
  EXPECT_TRUE(std::isfinite(g(std::nextafter(1.0, 0.0))));
}

TEST(G, DomainErrors) {
  EXPECT_THROW(g(1.0), usac::DomainError);
  EXPECT_THROW(g(-1.0), usac::DomainError);
  EXPECT_THROW(g(2.0), usac::DomainError);
  EXPECT_THROW(g(std::nan("")), usac::DomainError);
}

TEST(G, QuotedConstantsAreRootsToSixDecimals) {
  EXPECT_NEAR(usac::verify::g_root(-1.0), -0.831559, 5e-7);
  EXPECT_NEAR(usac::verify::g_root(-std::numbers::sqrt2), -0.916563, 5e-7);
  EXPECT_NEAR(usac::verify::g_root(2.0), 0.9670130078986872, 1e-12);
}

TEST(TwinStats, LaplaceAndTop) {
  const auto l = usac::utility::twin_stats_laplace(1.0, 5.0);
  EXPECT_DOUBLE_EQ(l.mu, 3.0);
  EXPECT_DOUBLE_EQ(l.sigma, 2.0);
  const auto t = usac::utility::twin_stats_top(5.0, 1.0);
  EXPECT_DOUBLE_EQ(t.mu, 3.0);
  EXPECT_DOUBLE_EQ(t.sigma, 4.0 / std::numbers::sqrt2);
}

TEST(ClosedForms, MatchQuadrature) {
  // The closed forms against direct integration of exp(λx) over each density.
  for (double k : {-0.99, -0.9, -0.5, -0.1, 0.2, 0.7, 0.95}) {
    const double sigma = 1.7, mu = -0.4;
    const double lambda = std::numbers::sqrt2 * k / sigma;
    EXPECT_NEAR(usac::utility::laplace_utility({mu, sigma}, k),
                usac::verify::laplace_utility_quadrature(mu, sigma, lambda), 1e-9)
        << k;
  }
  for (double lambda : {-2.0, -0.5, 0.3, 1.5}) {
    EXPECT_NEAR(usac::utility::gaussian_utility(0.7, 0.81, lambda),
                usac::verify::gaussian_utility_quadrature(0.7, 0.9, lambda), 1e-9)
        << lambda;
  }
}

TEST(ClosedForms, SamplingEstimatorInFiniteVarianceRange) {
  // For |κ| < 1/2 the estimator's summands have finite variance, so 1e6
  // samples suffice for 1e-2 at unit scale.
  usac::Rng rng(17);
  for (double k : {-0.45, -0.2, 0.2, 0.45}) {
    const double lambda = std::numbers::sqrt2 * k;
    const double est = usac::verify::log_mean_exp_utility(usac::verify::laplace_samples(2.0, 1.0, 1'000'000, rng), lambda);
    EXPECT_NEAR(est, usac::utility::laplace_utility({2.0, 1.0}, k), 1e-2) << k;
  }
}

TEST(ClosedForms, GaussianZeroVariance) {
  EXPECT_EQ(usac::utility::gaussian_utility(4.0, 0.0, -3.0), 4.0);
  EXPECT_THROW(usac::utility::gaussian_utility(4.0, -1.0, 1.0), usac::ContractError);
}

TEST(Rule, MinClipIsExactMin) {
  usac::Rng rng(1);
  const auto laplace = AggregationRule::laplace(-0.831559);
  const auto hard = AggregationRule::min_clip();
  for (int i = 0; i < 10000; ++i) {
    const double a = rng.uniform(-1e3, 1e3), b = rng.uniform(-1e3, 1e3);
    EXPECT_EQ(laplace(a, b), std::min(a, b));
    EXPECT_EQ(hard(a, b), std::min(a, b));
  }
}

TEST(Rule, QuotedConstantsSnapToExactCoefficients) {
  EXPECT_EQ(AggregationRule::laplace(-0.831559).coefficient(), -1.0);
  EXPECT_EQ(AggregationRule::laplace(0.831559).coefficient(), 1.0);
  EXPECT_EQ(AggregationRule::laplace(-0.916563).coefficient(), -std::numbers::sqrt2);
  EXPECT_EQ(AggregationRule::laplace(-0.5).coefficient(), g(-0.5));
  // the plain function does not snap
  EXPECT_NE(usac::utility::laplace_utility({0.0, 1.0}, -0.831559), -1.0);
  // κ = +0.831559 gives the max
  EXPECT_EQ(AggregationRule::laplace(0.831559)(2.0, 7.0), 7.0);
}

TEST(Rule, TopPessimisticEqualsMin) {
  const auto top = AggregationRule::top_beta(-1.0 / std::numbers::sqrt2);
  EXPECT_NEAR(top(3.0, -2.0), -2.0, 1e-15);
  EXPECT_NEAR(top(-2.0, 3.0), -2.0, 1e-15);
}

TEST(Rule, MeanAndTies) {
  EXPECT_EQ(AggregationRule::mean()(1.0, 4.0), 2.5);
  for (const auto& r : {AggregationRule::laplace(0.3), AggregationRule::min_clip(), AggregationRule::top_beta(2.0),
                        AggregationRule::gaussian(-1.0), AggregationRule::mean()}) {
    const auto a = r.evaluate(1.5, 1.5);
    EXPECT_EQ(a.value, 1.5);
    EXPECT_EQ(a.d_q1, 0.5);
    EXPECT_EQ(a.d_q2, 0.5);
  }
}

TEST(Rule, GradientsMatchFiniteDifferences) {
  usac::Rng rng(4);
  const double h = 1e-6;
  for (const auto& r : {AggregationRule::laplace(-0.5), AggregationRule::laplace(0.9), AggregationRule::min_clip(),
                        AggregationRule::top_beta(-0.7), AggregationRule::gaussian(0.6), AggregationRule::mean()}) {
    for (int i = 0; i < 50; ++i) {
      const double a = rng.uniform(-5.0, 5.0), b = rng.uniform(-5.0, 5.0);
      if (std::abs(a - b) < 1e-3) continue;
      const auto agg = r.evaluate(a, b);
      EXPECT_NEAR(agg.d_q1, (r(a + h, b) - r(a - h, b)) / (2 * h), 1e-6) << r.to_string();
      EXPECT_NEAR(agg.d_q2, (r(a, b + h) - r(a, b - h)) / (2 * h), 1e-6) << r.to_string();
    }
  }
}

TEST(Rule, MonotoneInKappa) {
  // larger κ never lowers the aggregate
  double prev = -1e300;
  for (double k = -0.99; k < 0.99; k += 0.01) {
    const double v = AggregationRule::laplace(k)(1.0, 3.0);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(Rule, TextRoundTrip) {
  for (const auto& r : {AggregationRule::laplace(-0.831559), AggregationRule::laplace(0.123456789),
                        AggregationRule::gaussian(-2.5), AggregationRule::min_clip(), AggregationRule::top_beta(0.25),
                        AggregationRule::mean()}) {
    const auto back = AggregationRule::parse(r.to_string());
    EXPECT_EQ(back, r);
    EXPECT_EQ(back.coefficient(), r.coefficient());
  }
}

TEST(Rule, ParseErrors) {
  EXPECT_THROW(AggregationRule::parse("laplace:1.0"), usac::ConfigError);
  EXPECT_THROW(AggregationRule::parse("laplace:0.9999995"), usac::ConfigError);
  EXPECT_THROW(AggregationRule::parse("laplace:abc"), usac::ConfigError);
  EXPECT_THROW(AggregationRule::parse("median"), usac::ConfigError);
  EXPECT_THROW(AggregationRule::parse("top:inf"), usac::ConfigError);
  EXPECT_NO_THROW(AggregationRule::parse("laplace:-0.999999"));
}

TEST(UtilityParams, Validation) {
  usac::utility::UtilityParams p;
  EXPECT_NO_THROW(p.validate());
  p.kappa_actor = 1.0;
  EXPECT_THROW(p.validate(), usac::ConfigError);
  p.kappa_actor = std::nan("");
  EXPECT_THROW(p.validate(), usac::ConfigError);
}

}  // namespace
