#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "usac/config.hpp"
#include "usac/harness.hpp"

namespace usac::harness {

/// Column order of the per-run CSV.
inline constexpr const char* kRunCsvHeader = "step,mean_return,std_return,estimation_error,alpha,wall_clock_s";
inline constexpr const char* kEpisodeCsvHeader = "step,episode,return";
inline constexpr const char* kGridCsvHeader =
    "kappa_critic,kappa_actor,runs,diverged_runs,final_return_mean,final_return_std,"
    "estimation_error_mean,estimation_error_std,auc_mean,auc_std";

/// First line of every emitted CSV: "# config_hash=<hex> seed=<n>".
std::string provenance_line(const std::string& config_hash, const std::string& seed);

std::string run_csv(const std::vector<MetricsRecord>& records, const std::string& config_hash, std::uint64_t seed);
/// One row per evaluation episode.
std::string episodes_csv(const std::vector<MetricsRecord>& records, const std::string& config_hash,
                         std::uint64_t seed);

struct ParsedRunCsv {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<MetricsRecord> records;
};
/// Inverse of run_csv; records come back without episode returns.
ParsedRunCsv parse_run_csv(const std::string& text);
/// Fills episode_returns from an episodes CSV of the same run.
void attach_episodes(std::vector<MetricsRecord>& records, const std::string& episodes_text);

std::string grid_csv(const GridSummary& summary, const std::vector<std::uint64_t>& seeds);
/// Plain-text report with the best cell first and every cell below it.
std::string grid_report(const GridSummary& summary, const GridSpec& spec);
std::string run_report(const RunResult& result, const RunConfig& config);

/// Writes run.csv, episodes.csv, config.conf and summary.txt into `dir`.
void emit_run(const std::filesystem::path& dir, const RunResult& result, const RunConfig& config);
/// Writes grid.csv, grid.conf, summary.txt and runs/<cell>_seed<n>.csv into `dir`.
void emit_grid(const std::filesystem::path& dir, const GridSummary& summary, const GridSpec& spec);

}  // namespace usac::harness
