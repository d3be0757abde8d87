#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace heom {

struct CheckResult {
  int criterion = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Runs the self-validation suite. criteria empty means all of 1..10; results
// come back sorted by criterion number. The conservation audit (6) executes
// after the propagation checks so it can inspect every trajectory the session
// produced, and the coherence ceiling (10) shares the qualitative-reproduction
// runs of 9 instead of recomputing them.
std::vector<CheckResult> run_validation(const std::vector<int>& criteria = {},
                                        std::ostream* progress = nullptr);

// One "criterion N (name): PASS/FAIL - detail [x s]" line per result;
// returns true when everything passed.
bool print_validation_report(const std::vector<CheckResult>& results,
                             std::ostream& out);

}  // namespace heom
