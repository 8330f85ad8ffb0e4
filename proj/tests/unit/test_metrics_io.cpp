#include <cmath>
#include <filesystem>
#include <limits>

#include <gtest/gtest.h>

#include "usac/errors.hpp"
#include "usac/metrics_io.hpp"

namespace {

using namespace usac::harness;

std::vector<MetricsRecord> golden_records() {
  MetricsRecord a;
  a.step = 0;
  a.episode_returns = {1.5, 2.5};
  a.mean_return = 2.0;
  a.std_return = 0.5;
  a.estimation_error = std::numeric_limits<double>::quiet_NaN();
  a.alpha = 1.0;
  MetricsRecord b;
  b.step = 100;
  b.episode_returns = {3.0, 4.25};
  b.mean_return = 3.625;
  b.std_return = 0.625;
  b.estimation_error = -0.125;
  b.alpha = 0.5;
  return {a, b};
}

TEST(MetricsIo, MatchesGoldenFiles) {
  const auto records = golden_records();
  EXPECT_EQ(run_csv(records, "0123456789abcdef", 7), read_file(USAC_GOLDEN_DIR "/run.csv"));
  EXPECT_EQ(episodes_csv(records, "0123456789abcdef", 7), read_file(USAC_GOLDEN_DIR "/episodes.csv"));
}

TEST(MetricsIo, RunCsvRoundTrip) {
  auto records = golden_records();
  records[1].wall_clock_s = 0.1 + 0.2;
  auto parsed = parse_run_csv(run_csv(records, "abc", 42));
  EXPECT_EQ(parsed.config_hash, "abc");
  EXPECT_EQ(parsed.seed, 42u);
  attach_episodes(parsed.records, episodes_csv(records, "abc", 42));
  ASSERT_EQ(parsed.records.size(), 2u);
  EXPECT_TRUE(parsed.records == records);
}

TEST(MetricsIo, MalformedCsv) {
  EXPECT_THROW(parse_run_csv(""), usac::ContractError);
  EXPECT_THROW(parse_run_csv("# config_hash=a seed=1\nstep,oops\n"), usac::ContractError);
  const std::string head = std::string("# config_hash=a seed=1\n") + kRunCsvHeader + "\n";
  EXPECT_THROW(parse_run_csv(head + "1,2,3\n"), usac::ContractError);
  EXPECT_THROW(parse_run_csv(head + "x,1,1,1,1,1\n"), usac::ContractError);
  auto records = golden_records();
  EXPECT_THROW(attach_episodes(records, std::string("# config_hash=a seed=1\n") + kEpisodeCsvHeader + "\n5,0,1\n"),
               usac::ContractError);
}

TEST(MetricsIo, EmptyGridWritesHeaderOnlyFiles) {
  GridSpec spec;
  spec.kappa_critic = {};
  spec.kappa_actor = {};
  GridSummary summary;
  summary.config_hash = "00";
  const auto csv = grid_csv(summary, spec.seeds);
  EXPECT_EQ(csv, std::string("# config_hash=00 seed=1,2,3\n") + kGridCsvHeader + "\n");
  const auto dir = std::filesystem::temp_directory_path() / "usac_empty_grid";
  std::filesystem::remove_all(dir);
  emit_grid(dir, summary, spec);
  EXPECT_EQ(read_file((dir / "grid.csv").string()), csv);
  EXPECT_FALSE(std::filesystem::exists(dir / "runs"));
  EXPECT_NE(read_file((dir / "summary.txt").string()).find("best cell: none"), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(MetricsIo, EmitRunWritesAllFiles) {
  RunConfig config;
  config.seed = 5;
  RunResult result{golden_records(), false, ""};
  const auto dir = std::filesystem::temp_directory_path() / "usac_emit_run";
  std::filesystem::remove_all(dir);
  emit_run(dir, result, config);
  const auto parsed = parse_run_csv(read_file((dir / "run.csv").string()));
  EXPECT_EQ(parsed.config_hash, config.hash());
  EXPECT_EQ(parsed.seed, 5u);
  EXPECT_TRUE(RunConfig::load((dir / "config.conf").string()) == config);
  const auto summary = read_file((dir / "summary.txt").string());
  EXPECT_NE(summary.find("status ok"), std::string::npos);
  EXPECT_NE(summary.find("auc "), std::string::npos);
  std::filesystem::remove_all(dir);
}

}  // namespace
