#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mrfattn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumeric = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. `args` excludes the program name. Returns the process
/// exit code: 0 success, 1 numeric failure, 2 usage or validation error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mrfattn::cli
