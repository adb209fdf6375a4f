#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spal::cli {

/// Runs the `spal` command line with `args` (program name excluded).
/// Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spal::cli
