#pragma once

#include <string>
#include <vector>

namespace spikebox {

struct CheckResult {
  std::string name;
  bool passed = false;
  double observed = 0.0;
  double bound = 0.0;
};

/// Named invariant suites: "operators", "extension", "linear", "semilinear".
/// `tol` tightens or relaxes the tolerance-style checks; structural checks
/// keep their own bounds. Throws on an unknown suite name.
std::vector<CheckResult> run_verify_suite(const std::string& suite, double tol);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace spikebox
