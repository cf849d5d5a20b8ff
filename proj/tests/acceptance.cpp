#include <cstdio>
#include <filesystem>

#include "moffle/verification.hpp"

// Runs every acceptance criterion against fresh scratch artifacts and exits
// nonzero if any of them fails.
int main() {
  const std::string scratch = "acceptance_scratch";
  std::filesystem::remove_all(scratch);
  const std::vector<moffle::CriterionResult> results = moffle::run_acceptance(scratch, true);

  int failed = 0;
  for (const moffle::CriterionResult& r : results) {
    if (!r.pass) ++failed;
  }
  std::printf("%d/%d criteria passed\n", static_cast<int>(results.size()) - failed,
              static_cast<int>(results.size()));
  return failed == 0 ? 0 : 1;
}
