#include "usac/verify/criteria.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <sstream>

#include "usac/agent.hpp"
#include "usac/checkpoint.hpp"
#include "usac/envs.hpp"
#include "usac/errors.hpp"
#include "usac/metrics_io.hpp"
#include "usac/presets.hpp"
#include "usac/tabular.hpp"
#include "usac/utility.hpp"
#include "usac/verify/oracles.hpp"

namespace usac::verify {

namespace {

using Clock = std::chrono::steady_clock;

std::string num(double v, int precision = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

// 1. g(0) = 0, odd, strictly increasing, quoted constants.
CriterionResult utility_math() {
  CriterionResult r;
  const auto t0 = Clock::now();
  constexpr int kGrid = 10000;
  constexpr double kConstTol = 1e-4;
  constexpr double kRootDecimals = 5e-7;

  bool ok = utility::g(0.0) == 0.0;
  std::string fail;
  if (!ok) fail = "g(0) != 0; ";
  double max_odd = 0.0;
  bool increasing = true;
  double prev = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double k = -utility::kKappaLimit + 2.0 * utility::kKappaLimit * i / (kGrid - 1);
    const double gk = utility::g(k);
    max_odd = std::max(max_odd, std::abs(gk + utility::g(-k)));
    if (!(gk > prev)) increasing = false;
    prev = gk;
  }
  if (max_odd > 0.0) fail += "g not odd; ";
  if (!increasing) fail += "g not increasing; ";
  const double e1 = std::abs(utility::g(utility::kKappaMinClip) + 1.0);
  const double e2 = std::abs(utility::g(utility::kKappaTopPessimistic) + std::sqrt(2.0));
  if (!(e1 < kConstTol)) fail += "g(-0.831559) off; ";
  if (!(e2 < kConstTol)) fail += "g(-0.916563) off; ";
  const double root1 = g_root(-1.0);
  const double root2 = g_root(-std::sqrt(2.0));
  const double d1 = std::abs(root1 - utility::kKappaMinClip);
  const double d2 = std::abs(root2 - utility::kKappaTopPessimistic);
  if (!(d1 < kRootDecimals && d2 < kRootDecimals)) fail += "root-found constants differ at 6 decimals; ";
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (r.seconds >= 1.0) fail += "runtime >= 1 s; ";
  r.passed = fail.empty();
  r.detail = "|g(-0.831559)+1|=" + num(e1) + " |g(-0.916563)+sqrt2|=" + num(e2) + " roots " + num(root1, 10) + ", " +
             num(root2, 10) + " odd-gap " + num(max_odd) + (fail.empty() ? "" : " | " + fail);
  return r;
}

// 2. Laplace at g = -1 and TOP at β = -1/√2 both reduce to min(q1, q2).
CriterionResult min_clip_equivalence() {
  CriterionResult r;
  constexpr int kPairs = 100000;
  constexpr double kTol = 1e-9;
  Rng rng(2);
  const auto laplace = utility::AggregationRule::laplace(utility::kKappaMinClip);
  const auto top = utility::AggregationRule::top_beta(-1.0 / std::sqrt(2.0));
  const double kappa_root = g_root(-1.0);
  double e_rule = 0.0, e_top = 0.0, e_root = 0.0;
  for (int i = 0; i < kPairs; ++i) {
    const double q1 = rng.uniform(-100.0, 100.0);
    const double q2 = rng.uniform(-100.0, 100.0);
    const double m = std::min(q1, q2);
    e_rule = std::max(e_rule, std::abs(laplace(q1, q2) - m));
    e_top = std::max(e_top, std::abs(top(q1, q2) - m));
    e_root = std::max(e_root, std::abs(utility::laplace_utility(utility::twin_stats_laplace(q1, q2), kappa_root) - m));
  }
  r.passed = e_rule < kTol && e_top < kTol && e_root < kTol;
  r.detail = "max |laplace(g=-1) - min|=" + num(e_rule) + " (closed form at root kappa " + num(e_root) +
             "), max |top(-1/sqrt2) - min|=" + num(e_top) + " over 1e5 pairs in [-100, 100]";
  return r;
}

// 3. Closed-form utilities against the direct log-mean-exp estimator.
CriterionResult sampling_oracle() {
  CriterionResult r;
  const auto t0 = Clock::now();
  constexpr Eigen::Index kSamples = 1'000'000;
  constexpr double kTol = 1e-2;
  constexpr double kMu = 3.0;
  constexpr double kSigma = 1.0;
  // Every κ with |g(κ)| <= 2 is covered by the endpoints and interior points below.
  const double k_edge = g_root(2.0);
  const std::vector<double> kappas{-k_edge, -0.95, -0.9, utility::kKappaMinClip, -0.7, -0.5, -0.25, -0.1,
                                   0.1,     0.25,  0.5,  0.7,  0.831559,         0.9,  0.95,  k_edge};
  const std::vector<double> lambda_sigma{-1.0, -0.5, -0.25, 0.25, 0.5, 1.0};

  Rng rng(3);
  double worst_laplace = 0.0, worst_gauss = 0.0;
  double worst_kappa = 0.0;
  std::string failing;
  for (double k : kappas) {
    const double lambda = std::sqrt(2.0) * k / kSigma;
    const double closed = utility::laplace_utility({kMu, kSigma}, k);
    const double est = log_mean_exp_utility(laplace_samples(kMu, kSigma, kSamples, rng), lambda);
    const double err = std::abs(closed - est);
    if (err > worst_laplace) {
      worst_laplace = err;
      worst_kappa = k;
    }
    if (!(err < kTol)) failing += num(k, 4) + " ";
  }
  for (double ls : lambda_sigma) {
    const double lambda = ls / kSigma;
    const double closed = utility::gaussian_utility(kMu, kSigma * kSigma, lambda);
    const double est = log_mean_exp_utility(gaussian_samples(kMu, kSigma, kSamples, rng), lambda);
    worst_gauss = std::max(worst_gauss, std::abs(closed - est));
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  r.passed = failing.empty() && worst_gauss < kTol && r.seconds < 30.0;
  r.detail = "sigma=1: max laplace err " + num(worst_laplace) + " at kappa " + num(worst_kappa, 4) +
             ", max gaussian err " + num(worst_gauss) + " (tol 1e-2)";
  if (!failing.empty()) r.detail += "; laplace estimator outside tol at kappa " + failing;
  return r;
}

// 4. Bellman error vs squared TD loss, and equality at the fixed point.
CriterionResult td_bound() {
  CriterionResult r;
  const auto t0 = Clock::now();
  constexpr int kMdps = 20, kTables = 100;
  constexpr double kFixedPointTol = 1e-10;
  constexpr double kAlpha = 0.2, kGamma = 0.9;
  Rng rng(4);
  int violations = 0;
  double max_fixed_lhs = 0.0;
  double min_gap = std::numeric_limits<double>::infinity();
  for (int m = 0; m < kMdps; ++m) {
    const auto mdp = tabular::TabularSoftMdp::random(5, 3, kGamma, rng);
    const auto pi = tabular::TabularPolicy::random(5, 3, rng);
    const double scale = mdp.reward_bound() / (1.0 - kGamma) + 5.0;
    for (int t = 0; t < kTables; ++t) {
      tabular::QTable u(5, 3);
      for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = rng.uniform(-scale, scale);
      const auto sides = tabular::td_bound_check(mdp, pi, kAlpha, u);
      if (!(sides.lhs <= sides.rhs)) ++violations;
      min_gap = std::min(min_gap, sides.rhs - sides.lhs);
    }
    const auto q = tabular::solve_soft_q(mdp, pi, kAlpha, 1e-13).q;
    max_fixed_lhs = std::max(max_fixed_lhs, tabular::td_bound_check(mdp, pi, kAlpha, q).lhs);
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  r.passed = violations == 0 && max_fixed_lhs < kFixedPointTol && r.seconds < 30.0;
  r.detail = std::to_string(violations) + " violations in 2000 tables (min rhs-lhs " + num(min_gap) +
             "), max lhs at U=Q^pi " + num(max_fixed_lhs);
  return r;
}

// 5. Fixed-point residual and contraction factor.
CriterionResult soft_bellman() {
  CriterionResult r;
  constexpr double kResidualTol = 1e-8;
  constexpr double kContractionSlack = 1e-12;
  Rng rng(5);
  double worst_residual = 0.0, worst_ratio_excess = -1.0, gamma_used = 0.0;
  for (double gamma : {0.5, 0.9, 0.99}) {
    for (int m = 0; m < 5; ++m) {
      const auto mdp = tabular::TabularSoftMdp::random(5, 3, gamma, rng);
      const auto pi = tabular::TabularPolicy::random(5, 3, rng);
      const double alpha = rng.uniform(0.0, 1.0);
      const auto sol = tabular::solve_soft_q(mdp, pi, alpha, 1e-10);
      const double residual =
          (tabular::soft_bellman_apply(mdp, pi, sol.q, alpha) - sol.q).cwiseAbs().maxCoeff();
      worst_residual = std::max(worst_residual, residual);
      for (int t = 0; t < 100; ++t) {
        tabular::QTable a(5, 3), b(5, 3);
        for (Eigen::Index i = 0; i < a.size(); ++i) {
          a.data()[i] = rng.uniform(-50.0, 50.0);
          b.data()[i] = rng.uniform(-50.0, 50.0);
        }
        const double num_ = (tabular::soft_bellman_apply(mdp, pi, a, alpha) -
                             tabular::soft_bellman_apply(mdp, pi, b, alpha)).cwiseAbs().maxCoeff();
        const double den = (a - b).cwiseAbs().maxCoeff();
        if (num_ / den - gamma > worst_ratio_excess) {
          worst_ratio_excess = num_ / den - gamma;
          gamma_used = gamma;
        }
      }
    }
  }
  r.passed = worst_residual < kResidualTol && worst_ratio_excess <= kContractionSlack;
  r.detail = "max residual " + num(worst_residual) + ", max (ratio - gamma) " + num(worst_ratio_excess) +
             " at gamma " + num(gamma_used);
  return r;
}

agent::AgentConfig small_pendulum_agent(const utility::AggregationRule& critic_rule,
                                        const utility::AggregationRule& actor_rule) {
  envs::Pendulum env;
  agent::AgentConfig c;
  c.state_dim = env.observation_dim();
  c.action_dim = env.action_dim();
  c.action_low = env.action_low();
  c.action_high = env.action_high();
  c.hidden = {16, 16};
  c.critic_rule = critic_rule;
  c.actor_rule = actor_rule;
  c.initial_alpha = 0.3;
  c.critic_output_scale = 1.0;
  return c;
}

Batch random_batch(int n, Rng& rng) {
  envs::Pendulum env;
  std::vector<Transition> items;
  for (int i = 0; i < n; ++i) {
    env.set_physical_state(Eigen::Vector2d(rng.uniform(-3.0, 3.0), rng.uniform(-6.0, 6.0)));
    const Eigen::VectorXd s = env.observation();
    const Eigen::VectorXd a = Eigen::VectorXd::Constant(1, rng.uniform(-1.9, 1.9));
    const auto step = env.step(a, rng);
    items.push_back({s, a, step.reward, step.observation, i % 5 == 4});
  }
  return Batch::from_transitions(items);
}

// 6. Analytic gradients against central differences.
CriterionResult gradient_integrity() {
  CriterionResult r;
  constexpr double kTol = 1e-4;
  constexpr double kStep = 1e-5;
  constexpr double kFloor = 1e-6;
  using utility::AggregationRule;
  const std::vector<std::pair<AggregationRule, AggregationRule>> rules{
      {AggregationRule::laplace(utility::kKappaMinClip), AggregationRule::laplace(utility::kKappaMinClip)},
      {AggregationRule::laplace(-0.5), AggregationRule::laplace(0.5)},
      {AggregationRule::gaussian(-0.3), AggregationRule::top_beta(0.4)},
      {AggregationRule::mean(), AggregationRule::laplace(-0.99)}};
  Rng rng(6);
  double worst_critic = 0.0, worst_actor = 0.0;
  for (const auto& [cr, ar] : rules) {
    Rng init(rng.index(1u << 30));
    agent::UsacAgent agent(small_pendulum_agent(cr, ar), init);
    const Batch batch = random_batch(12, rng);
    const Eigen::MatrixXd next_noise = rng.normal_matrix(1, batch.size());
    const Eigen::MatrixXd actor_noise = rng.normal_matrix(1, batch.size());
    const Eigen::RowVectorXd y = agent.critic_target(batch, next_noise);
    const auto cg = agent.critic_gradients(batch, y);
    Eigen::MatrixXd x(4, batch.size());
    x << batch.states, batch.actions;
    for (int k = 0; k < 2; ++k) {
      nn::Mlp net = agent.critic(k);
      auto loss = [&](const nn::Parameters& p) {
        net.mutable_params() = p;
        return (net.forward(x).row(0) - y).squaredNorm() / static_cast<double>(batch.size());
      };
      const auto fd = finite_difference_gradient(loss, agent.critic(k).params(), kStep);
      worst_critic = std::max(worst_critic, max_relative_error(k == 0 ? cg.critic1 : cg.critic2, fd, kFloor));
    }
    const auto ag = agent.actor_loss_gradient(batch.states, actor_noise);
    agent::UsacAgent probe = agent;
    auto actor_loss = [&](const nn::Parameters& p) {
      probe.actor().net().mutable_params() = p;
      return -probe.actor_objective(batch.states, actor_noise);
    };
    const auto fd = finite_difference_gradient(actor_loss, agent.actor().net().params(), kStep);
    worst_actor = std::max(worst_actor, max_relative_error(ag, fd, kFloor));
  }
  r.passed = worst_critic < kTol && worst_actor < kTol;
  r.detail = "width 16, 4 rule pairs: max rel err critic " + num(worst_critic) + ", actor " + num(worst_actor) +
             " (h=1e-5, floor 1e-6)";
  return r;
}

// 7. Min-clip setting of the rules against the hard-coded min reference path.
CriterionResult sac_equivalence() {
  CriterionResult r;
  constexpr int kSteps = 200;
  harness::RunConfig cfg = harness::preset_run(kLearningPreset);
  cfg.rule_critic = utility::AggregationRule::laplace(utility::kKappaMinClip);
  cfg.rule_actor = utility::AggregationRule::laplace(utility::kKappaMinClip);
  envs::Pendulum proto;
  const auto acfg = cfg.agent_config(proto.observation_dim(), proto.action_dim(), proto.action_low(), proto.action_high());

  struct Lane {
    agent::UsacAgent agent;
    envs::Pendulum env;
    ReplayBuffer buffer;
    Rng env_rng, act_rng, train_rng;
    Eigen::VectorXd obs;
    std::vector<double> stream;
  };
  auto make_lane = [&]() {
    Rng init(11);
    Lane lane{agent::UsacAgent(acfg, init), envs::Pendulum(), ReplayBuffer(100000, 3, 1), Rng(12), Rng(13), Rng(14),
              {}, {}};
    lane.obs = lane.env.reset(lane.env_rng);
    return lane;
  };
  Lane usac = make_lane();
  Lane ref = make_lane();
  const int warmup = static_cast<int>(acfg.batch_size);
  for (Lane* lane : {&usac, &ref}) {
    const bool reference = lane == &ref;
    for (int t = 0; t < warmup + kSteps; ++t) {
      const Eigen::VectorXd a = t < warmup ? Eigen::VectorXd::Constant(1, lane->act_rng.uniform(-2.0, 2.0))
                                           : lane->agent.act(lane->obs, lane->act_rng);
      const auto s = lane->env.step(a, lane->env_rng);
      lane->buffer.push({lane->obs, a, s.reward, s.observation, s.terminal});
      lane->obs = s.truncated ? lane->env.reset(lane->env_rng) : s.observation;
      lane->stream.push_back(a(0));
      if (t >= warmup) {
        const auto m = reference ? lane->agent.reference_sac_step(lane->buffer, lane->train_rng)
                                 : lane->agent.training_step(lane->buffer, lane->train_rng);
        lane->stream.insert(lane->stream.end(), {m.critic_losses.critic1, m.critic_losses.critic2, m.actor_objective,
                                                 m.alpha, m.mean_log_prob});
      }
    }
  }
  std::size_t first_diff = usac.stream.size();
  for (std::size_t i = 0; i < usac.stream.size(); ++i) {
    if (std::memcmp(&usac.stream[i], &ref.stream[i], sizeof(double)) != 0) {
      first_diff = i;
      break;
    }
  }
  const bool params_equal = usac.agent.save_state() == ref.agent.save_state();
  r.passed = usac.stream.size() == ref.stream.size() && first_diff == usac.stream.size() && params_equal;
  r.detail = std::to_string(kSteps) + " steps, " + std::to_string(usac.stream.size()) +
             " streamed values (actions, losses, objective, alpha, log-prob): " +
             (first_diff == usac.stream.size() ? "bit-identical" : "first difference at " + std::to_string(first_diff)) +
             ", final parameters " + (params_equal ? "identical" : "differ");
  return r;
}

// 10. Byte-identical CSVs and snapshot resume.
CriterionResult determinism() {
  CriterionResult r;
  harness::RunConfig cfg = harness::preset_run(kLearningPreset);
  cfg.total_steps = 2000;
  cfg.eval_every = 500;
  cfg.warmup_steps = 300;
  cfg.eval_episodes = 2;
  cfg.estimation_pairs = 4;
  cfg.estimation_rollouts = 4;
  cfg.hidden = {32, 32};
  cfg.wall_clock = false;
  cfg.seed = 7;

  const auto a = harness::run_training(cfg);
  const auto b = harness::run_training(cfg);
  const std::string csv_a = harness::run_csv(a.records, cfg.hash(), cfg.seed);
  const std::string csv_b = harness::run_csv(b.records, cfg.hash(), cfg.seed);
  const bool identical = csv_a == csv_b && harness::episodes_csv(a.records, cfg.hash(), cfg.seed) ==
                                               harness::episodes_csv(b.records, cfg.hash(), cfg.seed);

  harness::TrainingSession first(cfg);
  first.advance_to(1000);
  const std::string text = first.snapshot().serialize();
  auto resumed = harness::TrainingSession::resume(Checkpoint::parse(text));
  resumed.advance_to(cfg.total_steps);
  const auto c = resumed.result();
  // The resumed agent must also end in the unbroken run's exact parameters.
  harness::TrainingSession unbroken(cfg);
  unbroken.run();
  const bool params_ok = resumed.agent().save_state() == unbroken.agent().save_state();

  r.passed = identical && c.records == a.records && params_ok && !a.diverged;
  r.detail = std::string("repeat CSVs ") + (identical ? "byte-identical" : "differ") + "; resume at step 1000 -> 2000: " +
             (c.records == a.records ? "metrics match" : "metrics differ") + ", parameters " +
             (params_ok ? "match" : "differ") + " (" + std::to_string(text.size() / 1024) + " KiB snapshot)";
  return r;
}

}  // namespace

std::string CriteriaRunner::title(int id) {
  switch (id) {
    case 1: return "utility math suite";
    case 2: return "min-clip equivalence";
    case 3: return "sampling-oracle utility";
    case 4: return "Bellman error bounded by TD loss";
    case 5: return "soft Bellman fixed point";
    case 6: return "gradient integrity";
    case 7: return "SAC-equivalence A/B";
    case 8: return "learning smoke test";
    case 9: return "bias-direction property";
    case 10: return "determinism and serialization";
    default: throw ContractError("unknown criterion " + std::to_string(id));
  }
}

const harness::GridSummary& CriteriaRunner::learning_runs() {
  if (learning_) return *learning_;
  harness::GridSpec spec;
  spec.base = harness::preset_run(kLearningPreset);
  spec.kappa_critic = {utility::kKappaMinClip, 0.5};
  spec.kappa_actor = {utility::kKappaMinClip};
  spec.seeds = {1, 2, 3};
  spec.workers = options_.workers;
  if (options_.log) *options_.log << "training " << spec.cell_count() * spec.seeds.size() << " pendulum runs ("
                                  << kLearningPreset << ", " << spec.base.total_steps << " steps each)\n";
  const auto t0 = Clock::now();
  learning_ = harness::run_grid(spec);
  learning_seconds_ = std::chrono::duration<double>(Clock::now() - t0).count();
  harness::emit_grid(options_.output_dir, *learning_, spec);
  return *learning_;
}

CriterionResult CriteriaRunner::run(int id) {
  const auto t0 = Clock::now();
  CriterionResult r;
  try {
    switch (id) {
      case 1: r = utility_math(); break;
      case 2: r = min_clip_equivalence(); break;
      case 3: r = sampling_oracle(); break;
      case 4: r = td_bound(); break;
      case 5: r = soft_bellman(); break;
      case 6: r = gradient_integrity(); break;
      case 7: r = sac_equivalence(); break;
      case 8: {
        const auto& grid = learning_runs();
        const auto& sac = grid.cells.at(0);
        const double lo = 0.0;
        const double hi = envs::Pendulum::kMaxEpisodeSteps * envs::Pendulum().reward_bound();
        const double threshold = lo + 0.85 * (hi - lo);
        double worst_minutes = 0.0;
        std::string per_seed;
        for (const auto& run : sac.runs) {
          worst_minutes = std::max(worst_minutes, run.result.records.back().wall_clock_s / 60.0);
          per_seed += (per_seed.empty() ? "" : ", ") + num(run.final_return, 5);
        }
        r.passed = sac.final_return.mean >= threshold && sac.diverged_runs == 0 && worst_minutes < 15.0;
        r.detail = "final mean return " + num(sac.final_return.mean, 5) + " (seeds: " + per_seed +
                   ") vs threshold " + num(threshold, 4) + " of range [" + num(lo) + ", " + num(hi) +
                   "]; slowest seed " + num(worst_minutes) + " min";
        break;
      }
      case 9: {
        const auto& grid = learning_runs();
        const auto& pess = grid.cells.at(0);
        const auto& opt = grid.cells.at(1);
        double total_minutes = 0.0;
        for (const auto& cell : {pess, opt})
          for (const auto& run : cell.runs) total_minutes += run.result.records.back().wall_clock_s / 60.0;
        r.passed = opt.estimation_error.mean < pess.estimation_error.mean && opt.diverged_runs == 0 &&
                   pess.diverged_runs == 0 && total_minutes < 60.0;
        r.detail = "mean final estimation error: kappa_critic=+0.5 " + num(opt.estimation_error.mean, 4) +
                   " vs kappa_critic=-0.831559 " + num(pess.estimation_error.mean, 4) + "; runs took " +
                   num(total_minutes) + " min";
        break;
      }
      case 10: r = determinism(); break;
      default: throw ContractError("unknown criterion " + std::to_string(id));
    }
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.id = id;
  r.title = title(id);
  if (r.seconds == 0.0) r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

std::string format_result(const CriterionResult& result) {
  std::ostringstream out;
  out << (result.passed ? "[PASS] " : "[FAIL] ") << result.id << ". " << result.title << ": " << result.detail << " ("
      << num(result.seconds) << " s)";
  return out.str();
}

}  // namespace usac::verify
