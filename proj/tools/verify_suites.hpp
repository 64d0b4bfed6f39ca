#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace entmap::verify {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  /// Empty runs every suite.
  std::vector<std::string> suites;
  /// Multiplies every tolerance; values below 1 tighten the checks.
  double tolerance_scale = 1.0;
  std::uint64_t seed = 20230101;
};

/// chi2, stability, gradient, tanh, approx-law, sinkhorn-oracle,
/// assignment, cross-solver, lecam.
const std::vector<std::string>& suite_names();

/// Throws std::invalid_argument on an unknown suite name.
std::vector<CheckResult> run(const VerifyOptions& options);

/// One `PASS|FAIL suite/name: detail` line per check.
void print(const std::vector<CheckResult>& results, std::ostream& out);

}  // namespace entmap::verify
