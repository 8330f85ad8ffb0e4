#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "usac/agent.hpp"
#include "usac/utility.hpp"

namespace usac::harness {

enum class AlphaMode { Auto, Fixed };
enum class EvalMode { Deterministic, Sampled };

/// One training run. Defaults are the shared hyperparameters of the method.
struct RunConfig {
  std::string env = "pendulum";
  std::int64_t total_steps = 1'000'000;
  std::int64_t eval_every = 10'000;
  int eval_episodes = 10;
  std::uint64_t seed = 1;

  double gamma = 0.99;
  double tau = 5e-3;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double alpha_lr = 3e-4;
  int batch_size = 256;
  std::int64_t buffer_capacity = 1'000'000;
  /// Uniform-random actions before learning starts.
  std::int64_t warmup_steps = 1000;
  std::vector<int> hidden{256, 256};

  utility::AggregationRule rule_critic = utility::AggregationRule::laplace(utility::kKappaMinClip);
  utility::AggregationRule rule_actor = utility::AggregationRule::laplace(utility::kKappaMinClip);

  AlphaMode alpha_mode = AlphaMode::Auto;
  /// Starting value under Auto, the constant under Fixed.
  double alpha = 1.0;
  /// Unset means -action_dim.
  std::optional<double> target_entropy;
  EvalMode eval_mode = EvalMode::Deterministic;

  /// (state, action) pairs per evaluation point for the estimation error; 0 disables it.
  int estimation_pairs = 20;
  int estimation_rollouts = 10;
  /// When off, wall_clock_s is written as 0 so that output files are reproducible.
  bool wall_clock = true;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  /// Agent configuration for an environment with the given dimensions and action box.
  agent::AgentConfig agent_config(int state_dim, int action_dim, const Eigen::VectorXd& low,
                                  const Eigen::VectorXd& high) const;

  /// `key = value` lines, every key present, reals in shortest round-trip form.
  std::string serialize() const;
  /// Starts from the defaults and applies the given keys. Unknown keys, malformed
  /// values and invalid configurations are ConfigErrors.
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);
  void save(const std::string& path) const;

  /// Applies one `key = value` assignment without validating the whole config.
  void set(const std::string& key, const std::string& value);

  /// 64-bit FNV-1a of serialize(), as 16 hex digits.
  std::string hash() const;

  bool operator==(const RunConfig& other) const { return serialize() == other.serialize(); }
};

/// (κ_critic, κ_actor) sweep over a base configuration. Each cell runs every seed.
struct GridSpec {
  RunConfig base;
  std::vector<double> kappa_critic;
  std::vector<double> kappa_actor;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int workers = 1;
  /// Upper bound on cells × seeds.
  int max_runs = 1000;

  void validate() const;
  std::size_t cell_count() const { return kappa_critic.size() * kappa_actor.size(); }

  /// A RunConfig file with extra keys kappa_critic, kappa_actor, seeds (comma
  /// separated), workers and max_runs.
  std::string serialize() const;
  static GridSpec parse(const std::string& text);
  static GridSpec load(const std::string& path);
};

/// Splits a comma-separated list, trimming blanks.
std::vector<std::string> split_list(const std::string& text);

/// Reads a whole file; IoError with the path on failure.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace usac::harness
