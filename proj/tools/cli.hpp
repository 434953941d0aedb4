#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace opkern::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsage = 1,
    kNumerical = 2,
    kCheckFailed = 3,
};

/// Runs one `opkern` invocation. `args` excludes the program name. Artifacts go to files under
/// --out; `out` receives at most a one-line summary and `err` receives diagnostics.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace opkern::cli
