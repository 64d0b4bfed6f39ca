#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace entmap::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 1,
  kNotConverged = 2,
  kVerificationFailed = 3,
};

/// Runs the `entmap` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace entmap::cli
