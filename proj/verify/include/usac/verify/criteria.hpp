#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "usac/harness.hpp"

namespace usac::verify {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct CriteriaOptions {
  /// Where the learning runs write their CSVs and summaries.
  std::filesystem::path output_dir = "acceptance-runs";
  int workers = 1;
  /// Progress messages for long criteria; may be null.
  std::ostream* log = nullptr;
};

/// Preset used by the learning criteria.
inline constexpr const char* kLearningPreset = "pendulum-sac-desk";

/// Runs the acceptance criteria. The two learning criteria share one set of runs.
class CriteriaRunner {
 public:
  explicit CriteriaRunner(CriteriaOptions options) : options_(std::move(options)) {}

  static std::vector<int> all_ids() { return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}; }
  /// Criteria that train agents on the pendulum for minutes.
  static bool is_learning(int id) { return id == 8 || id == 9; }
  static std::string title(int id);

  CriterionResult run(int id);

 private:
  const harness::GridSummary& learning_runs();

  CriteriaOptions options_;
  std::optional<harness::GridSummary> learning_;
  double learning_seconds_ = 0.0;
};

/// "[PASS] <id>. <title>: <detail> (<seconds> s)"
std::string format_result(const CriterionResult& result);

}  // namespace usac::verify
