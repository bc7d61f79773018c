#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace grl::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitInputError = 2,
    kExitServiceError = 3,
    kExitNumericalError = 4,
};

/// Runs the grl command line. args excludes the program name. Results go to
/// `out` unless --output is given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace grl::cli
