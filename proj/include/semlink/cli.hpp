#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace semlink {

enum ExitStatus : int {
  kExitOk = 0,
  kExitFindings = 1,  // Irrelevant verdicts, or an eval below --min-f1
  kExitUsage = 2,
  kExitRuntime = 3,
};

/// Runs the `semlink` command line. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace semlink
