#include "usac/config.hpp"

#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "usac/checkpoint.hpp"
#include "usac/envs.hpp"
#include "usac/errors.hpp"

namespace usac::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& text) {
  Int v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return v;
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    return parse_real(text);
  } catch (const ContractError&) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
}

bool parse_switch(const std::string& key, const std::string& text) {
  if (text == "on" || text == "true") return true;
  if (text == "off" || text == "false") return false;
  throw ConfigError(key + ": expected on or off, got '" + text + "'");
}

template <typename Int>
std::string join_ints(const std::vector<Int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

std::string join_reals(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + format_real(xs[i]);
  return out;
}

utility::AggregationRule parse_rule(const std::string& key, const std::string& text) {
  try {
    return utility::AggregationRule::parse(text);
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

// Calls fn(key, value) for each assignment line.
void for_each_assignment(const std::string& text, const std::function<void(const std::string&, const std::string&)>& fn) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    fn(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key + ": " + what);
}

}  // namespace

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path);
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << contents;
  out.flush();
  if (!out) throw IoError("error writing " + path);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "env") env = value;
  else if (key == "total_steps") total_steps = parse_int<std::int64_t>(key, value);
  else if (key == "eval_every") eval_every = parse_int<std::int64_t>(key, value);
  else if (key == "eval_episodes") eval_episodes = parse_int<int>(key, value);
  else if (key == "seed") seed = parse_int<std::uint64_t>(key, value);
  else if (key == "gamma") gamma = parse_double(key, value);
  else if (key == "tau") tau = parse_double(key, value);
  else if (key == "actor_lr") actor_lr = parse_double(key, value);
  else if (key == "critic_lr") critic_lr = parse_double(key, value);
  else if (key == "alpha_lr") alpha_lr = parse_double(key, value);
  else if (key == "batch_size") batch_size = parse_int<int>(key, value);
  else if (key == "buffer_capacity") buffer_capacity = parse_int<std::int64_t>(key, value);
  else if (key == "warmup_steps") warmup_steps = parse_int<std::int64_t>(key, value);
  else if (key == "hidden") {
    hidden.clear();
    for (const auto& item : split_list(value)) hidden.push_back(parse_int<int>(key, item));
  } else if (key == "rule_critic") rule_critic = parse_rule(key, value);
  else if (key == "rule_actor") rule_actor = parse_rule(key, value);
  else if (key == "kappa_critic") rule_critic = parse_rule(key, "laplace:" + value);
  else if (key == "kappa_actor") rule_actor = parse_rule(key, "laplace:" + value);
  else if (key == "alpha_mode") {
    if (value == "auto") alpha_mode = AlphaMode::Auto;
    else if (value == "fixed") alpha_mode = AlphaMode::Fixed;
    else throw ConfigError("alpha_mode: expected auto or fixed, got '" + value + "'");
  } else if (key == "alpha") alpha = parse_double(key, value);
  else if (key == "target_entropy") {
    if (value == "auto") target_entropy.reset();
    else target_entropy = parse_double(key, value);
  } else if (key == "eval_mode") {
    if (value == "deterministic") eval_mode = EvalMode::Deterministic;
    else if (value == "sampled") eval_mode = EvalMode::Sampled;
    else throw ConfigError("eval_mode: expected deterministic or sampled, got '" + value + "'");
  } else if (key == "estimation_pairs") estimation_pairs = parse_int<int>(key, value);
  else if (key == "estimation_rollouts") estimation_rollouts = parse_int<int>(key, value);
  else if (key == "wall_clock") wall_clock = parse_switch(key, value);
  else throw ConfigError("unknown key '" + key + "'");
}

void RunConfig::validate() const {
  require(envs::is_known_env(env), "env", "unknown environment '" + env + "'");
  require(total_steps >= 0, "total_steps", "must be >= 0");
  require(eval_every >= 1, "eval_every", "must be >= 1");
  require(total_steps % eval_every == 0, "eval_every", "must divide total_steps");
  require(eval_episodes >= 1 && eval_episodes <= 10000, "eval_episodes", "must lie in [1, 10000]");
  require(gamma >= 0.0 && gamma < 1.0, "gamma", "must lie in [0, 1)");
  require(tau > 0.0 && tau < 1.0, "tau", "must lie in (0, 1)");
  for (const auto& [k, v] : {std::pair{"actor_lr", actor_lr}, {"critic_lr", critic_lr}, {"alpha_lr", alpha_lr}})
    require(std::isfinite(v) && v > 0.0 && v <= 1.0, k, "must lie in (0, 1]");
  require(batch_size >= 1 && batch_size <= 1'000'000, "batch_size", "must lie in [1, 1e6]");
  require(buffer_capacity >= 1 && buffer_capacity <= 100'000'000, "buffer_capacity", "must lie in [1, 1e8]");
  require(warmup_steps >= 0, "warmup_steps", "must be >= 0");
  require(!hidden.empty() && hidden.size() <= 16, "hidden", "needs 1 to 16 layers");
  for (int h : hidden) require(h >= 1 && h <= 4096, "hidden", "widths must lie in [1, 4096]");
  require(std::isfinite(alpha) && alpha > 0.0, "alpha", "must be positive");
  if (target_entropy) require(std::isfinite(*target_entropy), "target_entropy", "must be finite");
  require(estimation_pairs >= 0 && estimation_pairs <= 100000, "estimation_pairs", "must lie in [0, 1e5]");
  require(estimation_rollouts >= 1 && estimation_rollouts <= 100000, "estimation_rollouts", "must lie in [1, 1e5]");
  // Rules validate their own parameters on construction; re-parse catches hand-built ones.
  parse_rule("rule_critic", rule_critic.to_string());
  parse_rule("rule_actor", rule_actor.to_string());
}

agent::AgentConfig RunConfig::agent_config(int state_dim, int action_dim, const Eigen::VectorXd& low,
                                           const Eigen::VectorXd& high) const {
  agent::AgentConfig c;
  c.state_dim = state_dim;
  c.action_dim = action_dim;
  c.action_low = low;
  c.action_high = high;
  c.hidden = hidden;
  c.gamma = gamma;
  c.tau = tau;
  c.batch_size = static_cast<std::size_t>(batch_size);
  c.actor_optimizer.learning_rate = actor_lr;
  c.critic_optimizer.learning_rate = critic_lr;
  c.alpha_optimizer.learning_rate = alpha_lr;
  c.critic_rule = rule_critic;
  c.actor_rule = rule_actor;
  c.auto_alpha = alpha_mode == AlphaMode::Auto;
  c.initial_alpha = alpha;
  c.target_entropy = target_entropy;
  return c;
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  out << "env = " << env << '\n'
      << "total_steps = " << total_steps << '\n'
      << "eval_every = " << eval_every << '\n'
      << "eval_episodes = " << eval_episodes << '\n'
      << "seed = " << seed << '\n'
      << "gamma = " << format_real(gamma) << '\n'
      << "tau = " << format_real(tau) << '\n'
      << "actor_lr = " << format_real(actor_lr) << '\n'
      << "critic_lr = " << format_real(critic_lr) << '\n'
      << "alpha_lr = " << format_real(alpha_lr) << '\n'
      << "batch_size = " << batch_size << '\n'
      << "buffer_capacity = " << buffer_capacity << '\n'
      << "warmup_steps = " << warmup_steps << '\n'
      << "hidden = " << join_ints(hidden) << '\n'
      << "rule_critic = " << rule_critic.to_string() << '\n'
      << "rule_actor = " << rule_actor.to_string() << '\n'
      << "alpha_mode = " << (alpha_mode == AlphaMode::Auto ? "auto" : "fixed") << '\n'
      << "alpha = " << format_real(alpha) << '\n'
      << "target_entropy = " << (target_entropy ? format_real(*target_entropy) : "auto") << '\n'
      << "eval_mode = " << (eval_mode == EvalMode::Deterministic ? "deterministic" : "sampled") << '\n'
      << "estimation_pairs = " << estimation_pairs << '\n'
      << "estimation_rollouts = " << estimation_rollouts << '\n'
      << "wall_clock = " << (wall_clock ? "on" : "off") << '\n';
  return out.str();
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  for_each_assignment(text, [&c](const std::string& k, const std::string& v) { c.set(k, v); });
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  try {
    return parse(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void RunConfig::save(const std::string& path) const { write_file(path, serialize()); }

std::string RunConfig::hash() const { return fnv1a_hex(serialize()); }

void GridSpec::validate() const {
  base.validate();
  for (double k : kappa_critic) {
    require(std::isfinite(k) && std::abs(k) < 1.0, "kappa_critic", "values must lie in (-1, 1)");
    parse_rule("kappa_critic", "laplace:" + format_real(k));
  }
  for (double k : kappa_actor) {
    require(std::isfinite(k) && std::abs(k) < 1.0, "kappa_actor", "values must lie in (-1, 1)");
    parse_rule("kappa_actor", "laplace:" + format_real(k));
  }
  require(!seeds.empty(), "seeds", "need at least one seed");
  require(workers >= 1 && workers <= 1024, "workers", "must lie in [1, 1024]");
  require(max_runs >= 1, "max_runs", "must be >= 1");
  require(cell_count() * seeds.size() <= static_cast<std::size_t>(max_runs), "max_runs",
          "cells x seeds = " + std::to_string(cell_count() * seeds.size()) + " exceeds the cap " +
              std::to_string(max_runs));
}

std::string GridSpec::serialize() const {
  std::ostringstream out;
  out << base.serialize() << "kappa_critic = " << join_reals(kappa_critic) << '\n'
      << "kappa_actor = " << join_reals(kappa_actor) << '\n'
      << "seeds = " << join_ints(seeds) << '\n'
      << "workers = " << workers << '\n'
      << "max_runs = " << max_runs << '\n';
  return out.str();
}

GridSpec GridSpec::parse(const std::string& text) {
  GridSpec g;
  for_each_assignment(text, [&g](const std::string& k, const std::string& v) {
    if (k == "kappa_critic" || k == "kappa_actor") {
      auto& list = k == "kappa_critic" ? g.kappa_critic : g.kappa_actor;
      list.clear();
      for (const auto& item : split_list(v)) list.push_back(parse_double(k, item));
    } else if (k == "seeds") {
      g.seeds.clear();
      for (const auto& item : split_list(v)) g.seeds.push_back(parse_int<std::uint64_t>(k, item));
    } else if (k == "workers") {
      g.workers = parse_int<int>(k, v);
    } else if (k == "max_runs") {
      g.max_runs = parse_int<int>(k, v);
    } else {
      g.base.set(k, v);
    }
  });
  g.validate();
  return g;
}

GridSpec GridSpec::load(const std::string& path) {
  try {
    return parse(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace usac::harness
