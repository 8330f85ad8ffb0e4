#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "usac/agent.hpp"
#include "usac/checkpoint.hpp"
#include "usac/config.hpp"
#include "usac/envs.hpp"
#include "usac/replay_buffer.hpp"
#include "usac/rng.hpp"

namespace usac::harness {

/// One evaluation point.
struct MetricsRecord {
  std::int64_t step = 0;
  std::vector<double> episode_returns;
  double mean_return = 0.0;
  /// Population standard deviation of episode_returns.
  double std_return = 0.0;
  /// Monte-Carlo true discounted reward minus the agent's estimate, averaged over
  /// the sampled pairs. Positive means underestimation. NaN when disabled.
  double estimation_error = 0.0;
  double alpha = 0.0;
  double wall_clock_s = 0.0;

  bool operator==(const MetricsRecord& other) const;
};

struct RunResult {
  std::vector<MetricsRecord> records;
  bool diverged = false;
  std::string divergence_message;
};

/// Streams derived from the run seed.
enum class Stream : std::uint64_t { Init = 1, Environment = 2, Exploration = 3, Training = 4 };
std::uint64_t derive_seed(std::uint64_t seed, Stream stream);
/// Evaluation episodes and estimation rollouts use training seed + 100.
inline std::uint64_t evaluation_seed(std::uint64_t seed) { return seed + 100; }

/// Evaluation at the agent's current parameters: eval_episodes full episodes on
/// a fresh environment seeded with evaluation_seed, then the estimation error.
MetricsRecord evaluate(const RunConfig& config, const agent::UsacAgent& agent, std::int64_t step);

/// Mean over `pairs` of monte_carlo_return(s, a) - value_estimate(s, a), where the
/// rollouts follow the stochastic policy.
double estimation_error(const RunConfig& config, const envs::ContinuousEnv& env, const agent::UsacAgent& agent,
                        const Eigen::MatrixXd& states, const Eigen::MatrixXd& physical_states,
                        const Eigen::MatrixXd& actions, Rng& rng);

/// A training run that can be advanced in pieces and snapshotted between them.
class TrainingSession {
 public:
  explicit TrainingSession(RunConfig config);

  const RunConfig& config() const { return config_; }
  std::int64_t step() const { return step_; }
  bool finished() const { return diverged_ || step_ >= config_.total_steps; }
  const agent::UsacAgent& agent() const { return *agent_; }
  const ReplayBuffer& buffer() const { return buffer_; }

  /// Runs environment and training steps until `target_step` (capped at
  /// total_steps), evaluating at every multiple of eval_every. Divergence stops
  /// the run and is reported in result().
  void advance_to(std::int64_t target_step);
  void run() { advance_to(config_.total_steps); }

  RunResult result() const { return {records_, diverged_, divergence_message_}; }

  /// Everything needed to continue the run bit-for-bit: config, agent, optimizer
  /// moments, replay buffer, RNG streams, environment state and records.
  Checkpoint snapshot() const;
  static TrainingSession resume(const Checkpoint& snapshot);

 private:
  TrainingSession(RunConfig config, bool fresh);
  void record(std::int64_t step);
  void env_step();

  RunConfig config_;
  std::unique_ptr<envs::ContinuousEnv> env_;
  std::unique_ptr<agent::UsacAgent> agent_;
  ReplayBuffer buffer_;
  Rng env_rng_;
  Rng explore_rng_;
  Rng train_rng_;
  Eigen::VectorXd obs_;
  std::int64_t step_ = 0;
  std::vector<MetricsRecord> records_;
  bool diverged_ = false;
  std::string divergence_message_;
  double elapsed_s_ = 0.0;
};

/// TrainingSession(config).run() in one call.
RunResult run_training(const RunConfig& config);

/// Trapezoidal integral of mean_return over step, divided by the step span.
/// Needs at least two records with increasing steps.
double area_under_curve(const std::vector<MetricsRecord>& records);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};
MeanStd mean_std(const std::vector<double>& xs);

struct CellRun {
  std::uint64_t seed = 0;
  RunResult result;
  double final_return = 0.0;
  double final_estimation_error = 0.0;
  double auc = 0.0;
};

struct GridCell {
  double kappa_critic = 0.0;
  double kappa_actor = 0.0;
  std::vector<CellRun> runs;
  MeanStd final_return;
  MeanStd estimation_error;
  MeanStd auc;
  int diverged_runs = 0;
};

struct GridSummary {
  std::string config_hash;
  std::vector<GridCell> cells;  // κ_critic-major order
  /// Index of the cell with the largest mean final return; none for an empty grid.
  std::optional<std::size_t> best;
};

/// Runs every (κ_critic, κ_actor, seed) as an isolated run on up to spec.workers
/// threads. Per-cell statistics do not depend on execution order.
GridSummary run_grid(const GridSpec& spec);
/// The RunConfig a grid cell uses for one seed.
RunConfig cell_config(const GridSpec& spec, double kappa_critic, double kappa_actor, std::uint64_t seed);
/// Recomputes the per-cell statistics and the best cell from the runs.
void summarize(GridSummary& summary);

}  // namespace usac::harness
