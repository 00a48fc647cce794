#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace deltanet::cli {

/// Entry point of the `deltanet` tool: describe | cost | train | eval | report.
/// Returns the process exit code; all output goes to `out` and `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace deltanet::cli
