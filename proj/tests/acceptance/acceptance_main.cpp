// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is non-zero when a criterion fails, except for criteria listed in
// kKnownUnattainable, whose failure is reported but expected (see docs/acceptance.md).
#include <algorithm>
#include <iostream>
#include <string>
#include <vector>

#include "usac/verify/criteria.hpp"

namespace {

const std::vector<int> kKnownUnattainable{3};

}  // namespace

int main(int argc, char** argv) {
  usac::verify::CriteriaOptions opts;
  opts.log = &std::cerr;
  std::vector<int> ids = usac::verify::CriteriaRunner::all_ids();
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--out" && i + 1 < argc) {
      opts.output_dir = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      ids = {std::stoi(argv[++i])};
    } else if (arg == "--fast") {
      ids.erase(std::remove_if(ids.begin(), ids.end(), usac::verify::CriteriaRunner::is_learning), ids.end());
    } else {
      std::cerr << "usage: usac_acceptance [--out DIR] [--only N] [--fast]\n";
      return 2;
    }
  }

  usac::verify::CriteriaRunner runner(opts);
  int unexpected = 0, passed = 0;
  for (int id : ids) {
    const auto r = runner.run(id);
    std::cout << usac::verify::format_result(r) << std::endl;
    if (r.passed) {
      ++passed;
    } else if (std::find(kKnownUnattainable.begin(), kKnownUnattainable.end(), id) == kKnownUnattainable.end()) {
      ++unexpected;
    }
  }
  const int known = static_cast<int>(ids.size()) - passed - unexpected;
  std::cout << passed << "/" << ids.size() << " criteria passed";
  if (known > 0) std::cout << ", " << known << " known-unattainable failure (see docs/acceptance.md)";
  std::cout << std::endl;
  return unexpected == 0 ? 0 : 1;
}
