#include <benchmark/benchmark.h>

#include "usac/nn.hpp"
#include "usac/rng.hpp"

namespace {

void BM_MlpForward(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const int batch = static_cast<int>(state.range(1));
  usac::Rng rng(1);
  auto net = usac::nn::Mlp::uniform_fan_in({4, width, width, 1}, rng);
  const Eigen::MatrixXd x = rng.normal_matrix(4, batch);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
}
BENCHMARK(BM_MlpForward)->Args({64, 256})->Args({128, 256})->Args({256, 256})->Args({256, 1});

void BM_MlpForwardBackward(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const int batch = static_cast<int>(state.range(1));
  usac::Rng rng(1);
  auto net = usac::nn::Mlp::uniform_fan_in({4, width, width, 1}, rng);
  const Eigen::MatrixXd x = rng.normal_matrix(4, batch);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Ones(1, batch);
  for (auto _ : state) {
    usac::nn::Tape tape;
    net.forward(x, tape);
    benchmark::DoNotOptimize(net.backward(tape, g));
  }
}
BENCHMARK(BM_MlpForwardBackward)->Args({64, 256})->Args({128, 256})->Args({256, 256});

void BM_AdamStep(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  usac::Rng rng(1);
  auto net = usac::nn::Mlp::uniform_fan_in({4, width, width, 1}, rng);
  auto adam = usac::nn::AdamState::for_params(net.params(), usac::nn::AdamConfig{});
  auto grads = usac::nn::Parameters::zeros_like(net.params());
  for (auto& w : grads.weights) w.setConstant(1e-3);
  for (auto _ : state) usac::nn::adam_step(net, grads, adam);
}
BENCHMARK(BM_AdamStep)->Arg(64)->Arg(256);

}  // namespace
