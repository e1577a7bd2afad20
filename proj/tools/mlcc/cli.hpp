#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mlc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDiagnostics = 1;
inline constexpr int kExitFailure = 2;
inline constexpr int kExitUsage = 3;

/// Runs `mlcc` with `args` (without the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mlc::cli
