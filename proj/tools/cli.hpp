#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fuzzdepth::cli {

/// Runs the command line (without the program name). Returns the process
/// exit code: 0 success, 1 data or I/O error, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fuzzdepth::cli
