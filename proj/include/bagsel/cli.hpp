#pragma once

#include <string>
#include <vector>

namespace bagsel::cli {

/// Exit codes: 0 success, 2 validation failure, 3 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

/// Run the command line given the argv tail (no program name). Writes to
/// stdout/stderr; returns the exit code.
int run(const std::vector<std::string>& args);

}  // namespace bagsel::cli
