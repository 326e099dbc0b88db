#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pixle {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitSuccess = 0,
  kExitUsage = 1,
  kExitOracleOrIo = 2,
  kExitAttackFailed = 3,
  kExitInterrupted = 130,
};

/// Entry point shared by the `pixle` binary and the tests. `args` excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pixle
