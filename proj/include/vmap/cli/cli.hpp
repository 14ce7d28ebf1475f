#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace vmap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitRuntime = 4;

// Entry point behind the vmap binary. args excludes the program name.
// Normal output goes to `out`, diagnostics to `err`.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace vmap::cli
