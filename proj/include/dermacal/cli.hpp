#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dermacal::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kInfeasible = 2, kIo = 3 };

/// Entry point behind the dermacal executable. `args` excludes the program
/// name. Never throws; errors are printed to `err` and mapped to an exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace dermacal::cli
