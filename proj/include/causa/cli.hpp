#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace causa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitEstimation = 3;

/// Runs one invocation. `args` excludes the program name. Tables and help go
/// to `out`, diagnostics to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "M'SS.mmm\"" rendering used in the eval table.
std::string format_minutes(double ms);

}  // namespace causa::cli
