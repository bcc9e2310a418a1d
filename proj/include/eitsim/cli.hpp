#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace eit {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitIo = 1,
    kExitValidation = 2,
    kExitNumerical = 3,
    kExitNoConvergence = 4,
};

/// Runs the command-line tool. `args` excludes the program name. Normal
/// output goes to `out`; every error path writes one JSON line to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace eit
