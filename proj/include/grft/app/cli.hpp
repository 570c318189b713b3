#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace grft {

/// Exit codes of run_cli.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace grft
