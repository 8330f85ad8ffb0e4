#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "usac/errors.hpp"
#include "usac/harness.hpp"
#include "usac/verify/oracles.hpp"

namespace {

using namespace usac::harness;

RunConfig tiny_config() {
  RunConfig c;
  c.env = "pendulum";
  c.total_steps = 300;
  c.eval_every = 100;
  c.warmup_steps = 50;
  c.hidden = {8, 8};
  c.batch_size = 16;
  c.eval_episodes = 1;
  c.estimation_pairs = 2;
  c.estimation_rollouts = 2;
  c.wall_clock = false;
  return c;
}

MetricsRecord at(std::int64_t step, double value) {
  MetricsRecord r;
  r.step = step;
  r.mean_return = value;
  return r;
}

TEST(Seeds, StreamsAreDistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s : {0u, 1u, 2u})
    for (auto st : {Stream::Init, Stream::Environment, Stream::Exploration, Stream::Training})
      seen.insert(derive_seed(s, st));
  EXPECT_EQ(seen.size(), 12u);
  EXPECT_EQ(derive_seed(1, Stream::Init), derive_seed(1, Stream::Init));
  EXPECT_EQ(evaluation_seed(1), 101u);
}

TEST(Harness, ZeroStepsGivesOneRecord) {
  auto c = tiny_config();
  c.total_steps = 0;
  const auto r = run_training(c);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].step, 0);
  EXPECT_FALSE(r.diverged);
  EXPECT_EQ(r.records[0].episode_returns.size(), 1u);
  EXPECT_EQ(r.records[0].wall_clock_s, 0.0);
}

TEST(Harness, RecordsAtEveryEvaluationPoint) {
  const auto r = run_training(tiny_config());
  ASSERT_EQ(r.records.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(r.records[i].step, static_cast<std::int64_t>(100 * i));
    EXPECT_TRUE(std::isfinite(r.records[i].estimation_error));
    EXPECT_GE(r.records[i].mean_return, 0.0);
    EXPECT_LE(r.records[i].mean_return, 200.0);
  }
  // α only moves once learning has started
  EXPECT_EQ(r.records[0].alpha, 1.0);
  EXPECT_NE(r.records[3].alpha, 1.0);
}

TEST(Harness, RunsAreReproducible) {
  const auto a = run_training(tiny_config());
  const auto b = run_training(tiny_config());
  EXPECT_TRUE(a.records == b.records);
  auto other = tiny_config();
  other.seed = 2;
  EXPECT_FALSE(run_training(other).records == a.records);
}

TEST(Harness, DisabledEstimationWritesNaN) {
  auto c = tiny_config();
  c.total_steps = 0;
  c.estimation_pairs = 0;
  EXPECT_TRUE(std::isnan(run_training(c).records[0].estimation_error));
}

TEST(Harness, SnapshotResumeMatchesUninterruptedRun) {
  const auto full = run_training(tiny_config());
  TrainingSession first(tiny_config());
  first.advance_to(150);
  EXPECT_EQ(first.step(), 150);
  const auto snap = usac::Checkpoint::parse(first.snapshot().serialize());
  auto resumed = TrainingSession::resume(snap);
  EXPECT_EQ(resumed.step(), 150);
  resumed.run();
  EXPECT_TRUE(resumed.result().records == full.records);
  TrainingSession straight(tiny_config());
  straight.run();
  EXPECT_TRUE(resumed.agent().save_state() == straight.agent().save_state());
}

TEST(Auc, ConstantAndRamp) {
  EXPECT_DOUBLE_EQ(area_under_curve({at(0, 5.0), at(10, 5.0), at(30, 5.0)}), 5.0);
  EXPECT_DOUBLE_EQ(area_under_curve({at(0, 0.0), at(100, 10.0)}), 5.0);
  EXPECT_THROW(area_under_curve({at(0, 1.0)}), usac::ContractError);
  EXPECT_THROW(area_under_curve({at(0, 1.0), at(0, 2.0)}), usac::ContractError);
}

TEST(Auc, AgreesWithRefinedRectangles) {
  usac::Rng rng(3);
  std::vector<MetricsRecord> recs;
  std::vector<double> x, y;
  std::int64_t step = 0;
  for (int i = 0; i < 40; ++i) {
    const double v = 100.0 * (1 - std::exp(-i / 10.0)) + rng.uniform(-5, 5);
    recs.push_back(at(step, v));
    x.push_back(static_cast<double>(step));
    y.push_back(v);
    step += 100 + static_cast<std::int64_t>(rng.index(100));
  }
  const double oracle = usac::verify::refined_rectangle_mean(x, y, 1000);
  EXPECT_NEAR(area_under_curve(recs), oracle, 0.01 * std::abs(oracle));
}

TEST(Stats, MeanStdIsPopulation) {
  const auto m = mean_std({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_DOUBLE_EQ(m.std, std::sqrt(1.25));
  EXPECT_EQ(mean_std({7.0}).std, 0.0);
}

GridSpec tiny_grid() {
  GridSpec g;
  g.base = tiny_config();
  g.base.total_steps = 200;
  g.kappa_critic = {usac::utility::kKappaMinClip, 0.3};
  g.kappa_actor = {usac::utility::kKappaMinClip};
  g.seeds = {1, 2};
  return g;
}

TEST(Grid, SingleCellEqualsStandaloneRun) {
  auto g = tiny_grid();
  g.kappa_critic = {usac::utility::kKappaMinClip};
  g.seeds = {1};
  const auto summary = run_grid(g);
  ASSERT_EQ(summary.cells.size(), 1u);
  ASSERT_TRUE(summary.best.has_value());
  auto standalone = g.base;
  standalone.rule_critic = usac::utility::AggregationRule::laplace(usac::utility::kKappaMinClip);
  standalone.rule_actor = standalone.rule_critic;
  EXPECT_TRUE(cell_config(g, g.kappa_critic[0], g.kappa_actor[0], 1) == standalone);
  EXPECT_TRUE(summary.cells[0].runs[0].result.records == run_training(standalone).records);
  EXPECT_EQ(summary.cells[0].final_return.std, 0.0);
}

TEST(Grid, ResultsDoNotDependOnWorkerCount) {
  auto g1 = tiny_grid();
  auto g2 = tiny_grid();
  g2.workers = 3;
  const auto a = run_grid(g1), b = run_grid(g2);
  EXPECT_EQ(a.config_hash, b.config_hash);
  ASSERT_EQ(a.cells.size(), 2u);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    EXPECT_EQ(a.cells[i].kappa_critic, b.cells[i].kappa_critic);
    for (std::size_t k = 0; k < a.cells[i].runs.size(); ++k)
      EXPECT_TRUE(a.cells[i].runs[k].result.records == b.cells[i].runs[k].result.records);
    EXPECT_EQ(a.cells[i].final_return.mean, b.cells[i].final_return.mean);
  }
  EXPECT_EQ(a.best, b.best);
}

TEST(Grid, NonNativeEnvironmentFailsUpFront) {
  auto g = tiny_grid();
  g.base.env = "Hopper-v4";
  EXPECT_THROW(run_grid(g), usac::ConfigError);
}

}  // namespace
