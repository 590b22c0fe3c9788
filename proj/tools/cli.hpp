#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace commlink::cli {

/// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitNotConverged = 3;

/// Runs the command line `args` (args[0] is the program name), writing
/// human-readable output to `out` and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace commlink::cli
