#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ctaug::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 2,
    kExitIo = 3,
    kExitInternal = 4,
    kExitPrecondition = 5,
};

/// Runs the command line `args` (without the program name). Normal output
/// goes to `out`, diagnostics to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctaug::cli
