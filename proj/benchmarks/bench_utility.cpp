#include <benchmark/benchmark.h>

#include "usac/rng.hpp"
#include "usac/utility.hpp"

namespace {

void BM_G(benchmark::State& state) {
  double k = -0.9;
  for (auto _ : state) {
    benchmark::DoNotOptimize(usac::utility::g(k));
    k = k < 0.9 ? k + 1e-6 : -0.9;
  }
}
BENCHMARK(BM_G);

void BM_RuleEvaluate(benchmark::State& state) {
  const auto rule = usac::utility::AggregationRule::laplace(-0.5);
  usac::Rng rng(1);
  const Eigen::MatrixXd q = rng.normal_matrix(2, 1024);
  for (auto _ : state) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < q.cols(); ++j) acc += rule.evaluate(q(0, j), q(1, j)).value;
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * q.cols());
}
BENCHMARK(BM_RuleEvaluate);

}  // namespace
