#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace varcov::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsageError = 2,
    kNumericalFailure = 3,
    kNotConverged = 4,
};

/// Runs one `varcov` subcommand (fit, forecast, diagnose, simulate, bench).
/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "0..3" or "0,1,2,3" into a list of integers.
std::vector<int> parse_int_list(const std::string& text);

}  // namespace varcov::cli
