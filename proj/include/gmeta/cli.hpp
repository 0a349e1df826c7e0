#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gmeta::cli {

/// Runs the command line `args` (without the program name). Returns the
/// process exit code; diagnostics go to `err`, informational output to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace gmeta::cli
