#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace scalant::cli {

/// Runs the command line `args` (without the program name) and returns the
/// process exit status. Diagnostics go to `err`, reports to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scalant::cli
