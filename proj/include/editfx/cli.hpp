#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace editfx {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming a default JSON config file.
inline constexpr const char* kConfigEnv = "EDITFX_CONFIG";

/// Runs one command line (args[0] is the program name). Returns 0 on
/// success, 1 on runtime or data errors and 2 on usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace editfx
