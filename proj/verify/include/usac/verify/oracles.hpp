#pragma once

#include <functional>

#include <Eigen/Core>

#include "usac/envs.hpp"
#include "usac/nn.hpp"
#include "usac/rng.hpp"
#include "usac/tabular.hpp"

// Reference computations that share no code path with the library routines
// they are used to check.
namespace usac::verify {

/// κ with g(κ) = target, by bracketing root search on (-1, 1).
double g_root(double target);

/// Central differences of f at every scalar of `at`.
nn::Parameters finite_difference_gradient(const std::function<double(const nn::Parameters&)>& f,
                                          const nn::Parameters& at, double step);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor).
double max_relative_error(const nn::Parameters& a, const nn::Parameters& b, double floor);

/// (1/λ) log((1/n) Σ exp(λ x_i)), evaluated with the maximum factored out.
double log_mean_exp_utility(const Eigen::VectorXd& samples, double lambda);

/// Laplace samples with mean μ and standard deviation σ (scale σ/√2), by inverse CDF.
Eigen::VectorXd laplace_samples(double mu, double sigma, Eigen::Index n, Rng& rng);
Eigen::VectorXd gaussian_samples(double mu, double sigma, Eigen::Index n, Rng& rng);

/// (1/λ) log E[exp(λX)] by adaptive Gauss-Kronrod quadrature against the density.
double laplace_utility_quadrature(double mu, double sigma, double lambda);
double gaussian_utility_quadrature(double mu, double sigma, double lambda);

/// α = 0 policy evaluation as one dense linear solve over state-action pairs:
/// (I - γ P Π) q = r.
tabular::QTable policy_evaluation_solve(const tabular::TabularSoftMdp& mdp, const tabular::TabularPolicy& pi);

/// Discounted finite-horizon LQR by backward Riccati recursion:
///   min_u Σ_{t<T} γ^t (xᵀQx + r u²),  x' = A x + B u,  u unconstrained.
struct RiccatiSolution {
  std::vector<Eigen::Matrix2d> value;   // P_t, t = 0..T (P_T = 0)
  std::vector<Eigen::RowVector2d> gain;  // u_t = -K_t x
  double cost(const Eigen::Vector2d& x0) const { return x0.dot(value.front() * x0); }
};
RiccatiSolution discounted_riccati(const envs::PointMass::Lqr& lqr, double gamma, int horizon);

/// Left-rectangle sum of the piecewise-linear interpolant of (x, y) on a grid
/// `refine` times finer than the input spacing, divided by the x span.
double refined_rectangle_mean(const std::vector<double>& x, const std::vector<double>& y, int refine);

}  // namespace usac::verify
