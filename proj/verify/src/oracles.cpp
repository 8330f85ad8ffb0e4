#include "usac/verify/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "usac/errors.hpp"

namespace usac::verify {

namespace {

// log(1/(1-κ²))/(√2 κ), written independently of the library's version.
double g_direct(double kappa) {
  if (kappa == 0.0) return 0.0;
  return -std::log1p(-kappa * kappa) / (std::sqrt(2.0) * kappa);
}

}  // namespace

double g_root(double target) {
  const double lo = -1.0 + 1e-15;
  const double hi = 1.0 - 1e-15;
  auto f = [target](double k) { return g_direct(k) - target; };
  if (f(lo) * f(hi) > 0.0) throw DomainError("g_root: target outside the range of g on (-1, 1)");
  std::uintmax_t iterations = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52),
                                                        iterations);
  return 0.5 * (a + b);
}

nn::Parameters finite_difference_gradient(const std::function<double(const nn::Parameters&)>& f,
                                          const nn::Parameters& at, double step) {
  nn::Parameters grad = nn::Parameters::zeros_like(at);
  nn::Parameters probe = at;
  auto visit = [&](double& slot, double& out) {
    const double x0 = slot;
    slot = x0 + step;
    const double fp = f(probe);
    slot = x0 - step;
    const double fm = f(probe);
    slot = x0;
    out = (fp - fm) / (2.0 * step);
  };
  for (std::size_t l = 0; l < at.num_layers(); ++l) {
    for (Eigen::Index i = 0; i < at.weights[l].size(); ++i)
      visit(probe.weights[l].data()[i], grad.weights[l].data()[i]);
    for (Eigen::Index i = 0; i < at.biases[l].size(); ++i) visit(probe.biases[l].data()[i], grad.biases[l].data()[i]);
  }
  return grad;
}

double max_relative_error(const nn::Parameters& a, const nn::Parameters& b, double floor) {
  if (!a.same_shape(b)) throw ContractError("max_relative_error: shape mismatch");
  double worst = 0.0;
  auto scan = [&](const double* x, const double* y, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double denom = std::max({std::abs(x[i]), std::abs(y[i]), floor});
      worst = std::max(worst, std::abs(x[i] - y[i]) / denom);
    }
  };
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    scan(a.weights[l].data(), b.weights[l].data(), a.weights[l].size());
    scan(a.biases[l].data(), b.biases[l].data(), a.biases[l].size());
  }
  return worst;
}

double log_mean_exp_utility(const Eigen::VectorXd& samples, double lambda) {
  if (samples.size() == 0 || lambda == 0.0) throw ContractError("log_mean_exp_utility: need samples and λ != 0");
  const Eigen::ArrayXd z = lambda * samples.array();
  const double m = z.maxCoeff();
  const double lme = m + std::log((z - m).exp().mean());
  return lme / lambda;
}

Eigen::VectorXd laplace_samples(double mu, double sigma, Eigen::Index n, Rng& rng) {
  const double b = sigma / std::sqrt(2.0);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = rng.uniform(-0.5, 0.5);
    x(i) = mu - b * (u < 0.0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::abs(u));
  }
  return x;
}

Eigen::VectorXd gaussian_samples(double mu, double sigma, Eigen::Index n, Rng& rng) {
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = mu + sigma * rng.normal();
  return x;
}

double laplace_utility_quadrature(double mu, double sigma, double lambda) {
  const double b = sigma / std::sqrt(2.0);
  if (!(std::abs(lambda) * b < 1.0)) throw DomainError("laplace moment generating function diverges");
  // E exp(λ(X-μ)) = (1/2b) [∫_0^∞ e^{(λ-1/b)y} dy + ∫_0^∞ e^{-(λ+1/b)y} dy]; substitute u = rate·y.
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double inf = std::numeric_limits<double>::infinity();
  auto half = [&](double rate) {
    auto f = [](double u) { return std::exp(-u); };
    return GK::integrate(f, 0.0, inf, 15, 1e-14) / rate;
  };
  const double m = (half(1.0 / b - lambda) + half(1.0 / b + lambda)) / (2.0 * b);
  return mu + std::log(m) / lambda;
}

double gaussian_utility_quadrature(double mu, double sigma, double lambda) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double inf = std::numeric_limits<double>::infinity();
  const double pi = std::acos(-1.0);
  auto f = [&](double z) { return std::exp(lambda * sigma * z - 0.5 * z * z) / std::sqrt(2.0 * pi); };
  const double m = GK::integrate(f, -inf, inf, 15, 1e-14);
  return mu + std::log(m) / lambda;
}

tabular::QTable policy_evaluation_solve(const tabular::TabularSoftMdp& mdp, const tabular::TabularPolicy& pi) {
  const int S = mdp.n_states, A = mdp.n_actions, n = S * A;
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd r(n);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const int i = s * A + a;
      r(i) = mdp.reward(s, a);
      for (int s2 = 0; s2 < S; ++s2)
        for (int a2 = 0; a2 < A; ++a2) m(i, s2 * A + a2) -= mdp.gamma * mdp.transition(i, s2) * pi.probs(s2, a2);
    }
  }
  const Eigen::VectorXd q = m.fullPivLu().solve(r);
  tabular::QTable out(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) out(s, a) = q(s * A + a);
  return out;
}

RiccatiSolution discounted_riccati(const envs::PointMass::Lqr& lqr, double gamma, int horizon) {
  RiccatiSolution sol;
  sol.value.assign(static_cast<std::size_t>(horizon) + 1, Eigen::Matrix2d::Zero());
  sol.gain.assign(static_cast<std::size_t>(horizon), Eigen::RowVector2d::Zero());
  for (int t = horizon - 1; t >= 0; --t) {
    const Eigen::Matrix2d& next = sol.value[static_cast<std::size_t>(t) + 1];
    const double s = lqr.control_cost + gamma * lqr.b.dot(next * lqr.b);
    const Eigen::RowVector2d k = gamma * (lqr.b.transpose() * next * lqr.a) / s;
    sol.gain[static_cast<std::size_t>(t)] = k;
    const Eigen::Matrix2d closed = lqr.a - lqr.b * k;
    Eigen::Matrix2d p = lqr.state_cost + lqr.control_cost * k.transpose() * k + gamma * closed.transpose() * next * closed;
    sol.value[static_cast<std::size_t>(t)] = 0.5 * (p + p.transpose());
  }
  return sol;
}

double refined_rectangle_mean(const std::vector<double>& x, const std::vector<double>& y, int refine) {
  if (x.size() != y.size() || x.size() < 2 || refine < 1) throw ContractError("refined_rectangle_mean: bad input");
  double sum = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double h = (x[i] - x[i - 1]) / refine;
    for (int j = 0; j < refine; ++j) {
      const double t = static_cast<double>(j) / refine;
      sum += h * ((1.0 - t) * y[i - 1] + t * y[i]);
    }
  }
  return sum / (x.back() - x.front());
}

}  // namespace usac::verify
