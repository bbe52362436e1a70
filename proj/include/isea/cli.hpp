#pragma once

#include <iosfwd>

namespace isea {

/// Exit codes of the simulator.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitValidation = 2,
  kExitNonConvergence = 3,
};

/// Entry point of the isea_sim tool. Progress goes to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace isea
