#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hybridcorr::cli {

/// Parses `args` (without the program name) and runs one subcommand.
/// Returns 0 on success, 1 on a validation or invariant failure and 2 on a
/// usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hybridcorr::cli
