#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "usac/verify/oracles.hpp"

namespace {

using namespace usac::verify;

TEST(Oracles, GRootKnownValues) {
  EXPECT_NEAR(g_root(-1.0), -0.8315589481, 1e-9);
  EXPECT_NEAR(g_root(-std::numbers::sqrt2), -0.9165625831, 1e-9);
  EXPECT_NEAR(g_root(0.0), 0.0, 1e-12);
}

TEST(Oracles, QuadratureMatchesMomentGeneratingFunctions) {
  // Laplace(μ, b): E e^{λX} = e^{λμ} / (1 - b²λ²) for |λ| < 1/b
  const double mu = 0.7, sigma = 1.3, b = sigma / std::numbers::sqrt2;
  for (double lambda : {-0.9, -0.3, 0.2, 0.6}) {
    const double exact = mu - std::log(1 - b * b * lambda * lambda) / lambda;
    EXPECT_NEAR(laplace_utility_quadrature(mu, sigma, lambda), exact, 1e-9) << lambda;
    EXPECT_NEAR(gaussian_utility_quadrature(mu, sigma, lambda), mu + lambda * sigma * sigma / 2, 1e-9) << lambda;
  }
}

TEST(Oracles, SamplersHaveRightMoments) {
  usac::Rng rng(1);
  const auto x = laplace_samples(2.0, 0.5, 400000, rng);
  const double m = x.mean();
  const double sd = std::sqrt((x.array() - m).square().mean());
  EXPECT_NEAR(m, 2.0, 0.005);
  EXPECT_NEAR(sd, 0.5, 0.005);
  const auto y = gaussian_samples(-1.0, 2.0, 400000, rng);
  EXPECT_NEAR(y.mean(), -1.0, 0.02);
}

TEST(Oracles, LogMeanExpIsStable) {
  Eigen::VectorXd x(3);
  x << 1000.0, 1000.0, 1000.0;
  EXPECT_NEAR(log_mean_exp_utility(x, 5.0), 1000.0, 1e-12);
  x << 0.0, 1.0, 2.0;
  EXPECT_NEAR(log_mean_exp_utility(x, 1.0), std::log((1 + std::exp(1.0) + std::exp(2.0)) / 3), 1e-14);
}

TEST(Oracles, FiniteDifferencesOfAQuadratic) {
  usac::nn::Parameters p;
  p.weights.push_back(Eigen::MatrixXd::Constant(2, 2, 0.5));
  p.biases.push_back(Eigen::VectorXd::Constant(2, -1.0));
  auto f = [](const usac::nn::Parameters& q) { return q.weights[0].squaredNorm() + 3 * q.biases[0].sum(); };
  const auto g = finite_difference_gradient(f, p, 1e-5);
  usac::nn::Parameters expect = p;
  expect.weights[0] *= 2.0;
  expect.biases[0].setConstant(3.0);
  EXPECT_LT(max_relative_error(g, expect, 1e-8), 1e-8);
}

TEST(Oracles, RiccatiZeroHorizonAndScalarCase) {
  auto lqr = usac::envs::PointMass::lqr();
  const auto zero = discounted_riccati(lqr, 0.9, 0);
  EXPECT_EQ(zero.cost(Eigen::Vector2d(1, 1)), 0.0);
  const auto one = discounted_riccati(lqr, 0.9, 1);
  const Eigen::Vector2d x(0.3, -0.2);
  EXPECT_NEAR(one.cost(x), x.dot(lqr.state_cost * x), 1e-15);
  EXPECT_EQ(one.gain[0], Eigen::RowVector2d::Zero());
}

TEST(Oracles, RefinedRectangleMean) {
  EXPECT_NEAR(refined_rectangle_mean({0, 1, 2}, {0, 1, 2}, 100000), 1.0, 1e-4);
}

}  // namespace
