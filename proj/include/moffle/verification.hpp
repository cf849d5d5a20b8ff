#pragma once

#include <string>
#include <vector>

namespace moffle {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  std::string detail;
};

// Oracle-verification suite over the reference environment (seed 7). Each
// criterion is timed and exception-safe: infrastructure errors become
// failures carrying the exception text instead of aborting the run.
// `scratch_dir` receives the end-to-end run directories.
std::vector<CriterionResult> run_acceptance(const std::string& scratch_dir, bool verbose = false);

}  // namespace moffle
