#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fpscan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNegative = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

/// Entry point behind the fpscan executable. args excludes the program
/// name. Human-readable output goes to out, diagnostics to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fpscan::cli
