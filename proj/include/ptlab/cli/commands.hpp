#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ptlab::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitTraining = 3,
  kExitAssertion = 4,
  kExitNouveauFound = 5,
};

/// Runs one subcommand. `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ptlab::cli
