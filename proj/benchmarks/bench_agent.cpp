#include <benchmark/benchmark.h>

#include "usac/agent.hpp"
#include "usac/envs.hpp"
#include "usac/replay_buffer.hpp"

namespace {

usac::agent::AgentConfig pendulum_config(int width) {
  usac::envs::Pendulum env;
  usac::agent::AgentConfig c;
  c.state_dim = env.observation_dim();
  c.action_dim = env.action_dim();
  c.action_low = env.action_low();
  c.action_high = env.action_high();
  c.hidden = {width, width};
  return c;
}

usac::ReplayBuffer filled_buffer(std::size_t n) {
  usac::envs::Pendulum env;
  usac::Rng rng(3);
  usac::ReplayBuffer buffer(n, env.observation_dim(), env.action_dim());
  Eigen::VectorXd obs = env.reset(rng);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd a = Eigen::VectorXd::Constant(1, rng.uniform(-2.0, 2.0));
    const auto r = env.step(a, rng);
    buffer.push({obs, a, r.reward, r.observation, r.terminal});
    obs = r.truncated ? env.reset(rng) : r.observation;
  }
  return buffer;
}

void BM_TrainingStep(benchmark::State& state) {
  usac::Rng init(1);
  usac::agent::UsacAgent agent(pendulum_config(static_cast<int>(state.range(0))), init);
  const auto buffer = filled_buffer(5000);
  usac::Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(agent.training_step(buffer, rng));
}
BENCHMARK(BM_TrainingStep)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Act(benchmark::State& state) {
  usac::Rng init(1);
  usac::agent::UsacAgent agent(pendulum_config(256), init);
  const Eigen::VectorXd s = Eigen::Vector3d(1.0, 0.0, 0.5);
  usac::Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(agent.act(s, rng));
}
BENCHMARK(BM_Act);

}  // namespace
