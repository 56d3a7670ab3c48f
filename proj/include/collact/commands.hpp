#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace collact {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitVerification = 2, kExitInfeasible = 3 };

// Runs one CLI invocation in-process. `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace collact
