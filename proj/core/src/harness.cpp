#include "usac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "usac/errors.hpp"

namespace usac::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool same_real(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

Eigen::VectorXd uniform_action(const envs::ContinuousEnv& env, Rng& rng) {
  const Eigen::VectorXd lo = env.action_low();
  const Eigen::VectorXd hi = env.action_high();
  Eigen::VectorXd a(lo.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.uniform(lo(i), hi(i));
  return a;
}

Eigen::MatrixXd columns(const std::vector<Eigen::VectorXd>& items, const std::vector<std::size_t>& picks) {
  Eigen::MatrixXd m(items.front().size(), static_cast<Eigen::Index>(picks.size()));
  for (std::size_t j = 0; j < picks.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = items[picks[j]];
  return m;
}

}  // namespace

bool MetricsRecord::operator==(const MetricsRecord& o) const {
  if (step != o.step || episode_returns.size() != o.episode_returns.size()) return false;
  for (std::size_t i = 0; i < episode_returns.size(); ++i)
    if (!same_real(episode_returns[i], o.episode_returns[i])) return false;
  return same_real(mean_return, o.mean_return) && same_real(std_return, o.std_return) &&
         same_real(estimation_error, o.estimation_error) && same_real(alpha, o.alpha) &&
         same_real(wall_clock_s, o.wall_clock_s);
}

std::uint64_t derive_seed(std::uint64_t seed, Stream stream) {
  // splitmix64 finalizer over seed and stream id
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(stream) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

MeanStd mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size()))};
}

double estimation_error(const RunConfig& config, const envs::ContinuousEnv& env, const agent::UsacAgent& agent,
                        const Eigen::MatrixXd& states, const Eigen::MatrixXd& physical_states,
                        const Eigen::MatrixXd& actions, Rng& rng) {
  if (states.cols() == 0) throw ContractError("estimation_error: no pairs");
  const Eigen::RowVectorXd estimates = agent.value_estimate(states, actions);
  const int horizon = envs::discounted_horizon(config.gamma, env.reward_bound());
  const envs::ActionSampler sampler = [&agent](const Eigen::MatrixXd& obs, Rng& r) {
    return agent.actor().sample(obs, r).action;
  };
  double total = 0.0;
  for (Eigen::Index j = 0; j < states.cols(); ++j) {
    const auto truth = envs::monte_carlo_return(env, sampler, physical_states.col(j), actions.col(j), config.gamma,
                                                horizon, config.estimation_rollouts, rng);
    total += truth.mean - estimates(j);
  }
  return total / static_cast<double>(states.cols());
}

MetricsRecord evaluate(const RunConfig& config, const agent::UsacAgent& agent, std::int64_t step) {
  auto env = envs::make_env(config.env);
  Rng rng(evaluation_seed(config.seed));
  MetricsRecord rec;
  rec.step = step;
  rec.alpha = agent.alpha();
  std::vector<Eigen::VectorXd> seen_obs, seen_state, seen_action;
  for (int ep = 0; ep < config.eval_episodes; ++ep) {
    Eigen::VectorXd obs = env->reset(rng);
    double ret = 0.0;
    for (;;) {
      Eigen::VectorXd a =
          config.eval_mode == EvalMode::Deterministic ? agent.act_deterministic(obs) : agent.act(obs, rng);
      seen_obs.push_back(obs);
      seen_state.push_back(env->physical_state());
      seen_action.push_back(a);
      const auto r = env->step(a, rng);
      ret += r.reward;
      obs = r.observation;
      if (r.terminal || r.truncated) break;
    }
    rec.episode_returns.push_back(ret);
  }
  const auto ms = mean_std(rec.episode_returns);
  rec.mean_return = ms.mean;
  rec.std_return = ms.std;

  if (config.estimation_pairs == 0) {
    rec.estimation_error = std::numeric_limits<double>::quiet_NaN();
    return rec;
  }
  std::vector<std::size_t> picks(static_cast<std::size_t>(config.estimation_pairs));
  for (auto& p : picks) p = rng.index(seen_obs.size());
  rec.estimation_error = estimation_error(config, *env, agent, columns(seen_obs, picks), columns(seen_state, picks),
                                          columns(seen_action, picks), rng);
  return rec;
}

TrainingSession::TrainingSession(RunConfig config) : TrainingSession(std::move(config), true) {}

TrainingSession::TrainingSession(RunConfig config, bool fresh)
    : config_((config.validate(), std::move(config))),
      env_(envs::make_env(config_.env)),
      buffer_(static_cast<std::size_t>(config_.buffer_capacity), env_->observation_dim(), env_->action_dim()),
      env_rng_(derive_seed(config_.seed, Stream::Environment)),
      explore_rng_(derive_seed(config_.seed, Stream::Exploration)),
      train_rng_(derive_seed(config_.seed, Stream::Training)) {
  Rng init(derive_seed(config_.seed, Stream::Init));
  agent_ = std::make_unique<agent::UsacAgent>(
      config_.agent_config(env_->observation_dim(), env_->action_dim(), env_->action_low(), env_->action_high()),
      init);
  if (fresh) {
    obs_ = env_->reset(env_rng_);
    record(0);
  }
}

void TrainingSession::record(std::int64_t step) {
  MetricsRecord rec = evaluate(config_, *agent_, step);
  rec.wall_clock_s = config_.wall_clock ? elapsed_s_ : 0.0;
  records_.push_back(std::move(rec));
}

void TrainingSession::env_step() {
  Eigen::VectorXd action =
      step_ < config_.warmup_steps ? uniform_action(*env_, explore_rng_) : agent_->act(obs_, explore_rng_);
  const auto r = env_->step(action, env_rng_);
  buffer_.push({obs_, action, r.reward, r.observation, r.terminal});
  obs_ = (r.terminal || r.truncated) ? env_->reset(env_rng_) : r.observation;
  ++step_;
  if (step_ > config_.warmup_steps) agent_->training_step(buffer_, train_rng_);
}

void TrainingSession::advance_to(std::int64_t target_step) {
  target_step = std::min(target_step, config_.total_steps);
  auto t0 = Clock::now();
  try {
    while (!diverged_ && step_ < target_step) {
      env_step();
      if (step_ % config_.eval_every == 0) {
        elapsed_s_ += seconds_since(t0);
        t0 = Clock::now();
        record(step_);
      }
    }
  } catch (const DivergenceError& e) {
    diverged_ = true;
    divergence_message_ = "step " + std::to_string(step_) + ": " + e.what();
  } catch (const NonFiniteGradientError& e) {
    diverged_ = true;
    divergence_message_ = "step " + std::to_string(step_) + ": " + e.what();
  }
  elapsed_s_ += seconds_since(t0);
}

Checkpoint TrainingSession::snapshot() const {
  Checkpoint cp;
  cp.put_text("config", config_.serialize());
  cp.put_int("step", step_);
  cp.put_int("diverged", diverged_ ? 1 : 0);
  cp.put_text("divergence_message", divergence_message_);
  cp.put_real("elapsed_s", elapsed_s_);
  cp.merge("agent", agent_->save_state());

  const auto st = buffer_.storage();
  cp.put_tensor("buffer/states", st.states);
  cp.put_tensor("buffer/actions", st.actions);
  cp.put_tensor("buffer/next_states", st.next_states);
  cp.put_tensor("buffer/rewards", st.rewards);
  cp.put_tensor("buffer/terminals", st.terminals);
  cp.put_int("buffer/size", static_cast<std::int64_t>(st.size));
  cp.put_int("buffer/next", static_cast<std::int64_t>(st.next));

  cp.put_text("rng/env", env_rng_.serialize());
  cp.put_text("rng/explore", explore_rng_.serialize());
  cp.put_text("rng/train", train_rng_.serialize());

  cp.put_tensor("env/state", env_->physical_state());
  cp.put_int("env/elapsed", env_->elapsed_steps());
  cp.put_tensor("env/observation", obs_);

  const auto n = static_cast<Eigen::Index>(records_.size());
  Eigen::MatrixXd table(n, 6);
  Eigen::MatrixXd returns(n, config_.eval_episodes);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records_[static_cast<std::size_t>(i)];
    table.row(i) << static_cast<double>(r.step), r.mean_return, r.std_return, r.estimation_error, r.alpha,
        r.wall_clock_s;
    for (Eigen::Index j = 0; j < returns.cols(); ++j) returns(i, j) = r.episode_returns[static_cast<std::size_t>(j)];
  }
  cp.put_tensor("records/table", table);
  cp.put_tensor("records/returns", returns);
  return cp;
}

TrainingSession TrainingSession::resume(const Checkpoint& cp) {
  TrainingSession s(RunConfig::parse(cp.text("config")), false);
  s.step_ = cp.integer("step");
  s.diverged_ = cp.integer("diverged") != 0;
  s.divergence_message_ = cp.text("divergence_message");
  s.elapsed_s_ = cp.real("elapsed_s");
  s.agent_->load_state(cp.extract("agent"));

  ReplayBuffer::Storage st;
  st.states = cp.tensor("buffer/states");
  st.actions = cp.tensor("buffer/actions");
  st.next_states = cp.tensor("buffer/next_states");
  st.rewards = cp.tensor("buffer/rewards");
  st.terminals = cp.tensor("buffer/terminals");
  st.size = static_cast<std::size_t>(cp.integer("buffer/size"));
  st.next = static_cast<std::size_t>(cp.integer("buffer/next"));
  s.buffer_.restore(st);

  s.env_rng_ = Rng::deserialize(cp.text("rng/env"));
  s.explore_rng_ = Rng::deserialize(cp.text("rng/explore"));
  s.train_rng_ = Rng::deserialize(cp.text("rng/train"));

  s.env_->set_physical_state(cp.tensor("env/state").col(0));
  s.env_->set_elapsed_steps(static_cast<int>(cp.integer("env/elapsed")));
  s.obs_ = cp.tensor("env/observation").col(0);

  const auto& table = cp.tensor("records/table");
  const auto& returns = cp.tensor("records/returns");
  if (table.cols() != 6 || returns.rows() != table.rows())
    throw ContractError("snapshot: malformed records");
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    MetricsRecord r;
    r.step = static_cast<std::int64_t>(table(i, 0));
    r.mean_return = table(i, 1);
    r.std_return = table(i, 2);
    r.estimation_error = table(i, 3);
    r.alpha = table(i, 4);
    r.wall_clock_s = table(i, 5);
    for (Eigen::Index j = 0; j < returns.cols(); ++j) r.episode_returns.push_back(returns(i, j));
    s.records_.push_back(std::move(r));
  }
  return s;
}

RunResult run_training(const RunConfig& config) {
  TrainingSession session(config);
  session.run();
  return session.result();
}

double area_under_curve(const std::vector<MetricsRecord>& records) {
  if (records.size() < 2) throw ContractError("area_under_curve: needs at least two records");
  double area = 0.0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const double dx = static_cast<double>(records[i].step - records[i - 1].step);
    if (!(dx > 0.0)) throw ContractError("area_under_curve: steps must increase");
    area += 0.5 * dx * (records[i].mean_return + records[i - 1].mean_return);
  }
  return area / static_cast<double>(records.back().step - records.front().step);
}

RunConfig cell_config(const GridSpec& spec, double kappa_critic, double kappa_actor, std::uint64_t seed) {
  RunConfig c = spec.base;
  c.rule_critic = utility::AggregationRule::laplace(kappa_critic);
  c.rule_actor = utility::AggregationRule::laplace(kappa_actor);
  c.seed = seed;
  return c;
}

void summarize(GridSummary& summary) {
  summary.best.reset();
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < summary.cells.size(); ++c) {
    auto& cell = summary.cells[c];
    std::vector<double> finals, errors, aucs;
    cell.diverged_runs = 0;
    for (auto& run : cell.runs) {
      const auto& recs = run.result.records;
      run.final_return = recs.empty() ? std::numeric_limits<double>::quiet_NaN() : recs.back().mean_return;
      run.final_estimation_error =
          recs.empty() ? std::numeric_limits<double>::quiet_NaN() : recs.back().estimation_error;
      run.auc = recs.size() >= 2 ? area_under_curve(recs) : std::numeric_limits<double>::quiet_NaN();
      finals.push_back(run.final_return);
      errors.push_back(run.final_estimation_error);
      aucs.push_back(run.auc);
      if (run.result.diverged) ++cell.diverged_runs;
    }
    cell.final_return = mean_std(finals);
    cell.estimation_error = mean_std(errors);
    cell.auc = mean_std(aucs);
    if (cell.final_return.mean > best_value) {
      best_value = cell.final_return.mean;
      summary.best = c;
    }
  }
}

GridSummary run_grid(const GridSpec& spec) {
  spec.validate();
  envs::make_env(spec.base.env);  // fail before spawning workers

  GridSummary summary;
  // the worker count does not affect results, so it stays out of the hash
  GridSpec hashed = spec;
  hashed.workers = 1;
  summary.config_hash = fnv1a_hex(hashed.serialize());
  for (double kc : spec.kappa_critic)
    for (double ka : spec.kappa_actor) {
      GridCell cell;
      cell.kappa_critic = kc;
      cell.kappa_actor = ka;
      cell.runs.resize(spec.seeds.size());
      summary.cells.push_back(std::move(cell));
    }

  const std::size_t per_cell = spec.seeds.size();
  const std::size_t total = summary.cells.size() * per_cell;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (std::size_t k = next++; k < total; k = next++) {
      auto& cell = summary.cells[k / per_cell];
      auto& run = cell.runs[k % per_cell];
      run.seed = spec.seeds[k % per_cell];
      try {
        run.result = run_training(cell_config(spec, cell.kappa_critic, cell.kappa_actor, run.seed));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(spec.workers), std::max<std::size_t>(total, 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  summarize(summary);
  return summary;
}

}  // namespace usac::harness
