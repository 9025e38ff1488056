#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hfspill::cli {

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 1 on invalid input and 2 when the computation fails.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hfspill::cli
