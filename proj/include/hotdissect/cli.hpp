#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hotdissect::cli {

/// Runs one command line (args[0] is the program name). Returns the process
/// exit code: 0 success, 1 computation failure, 2 usage or input error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hotdissect::cli
