#pragma once

#include <iosfwd>

namespace flipbench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitSelftest = 3;

/// Entry point for the flipbench tool: collect, simulate, analyze, predict,
/// report, selftest. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace flipbench
