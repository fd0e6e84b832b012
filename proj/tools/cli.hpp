#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tmachine::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

// Runs the tool with argv-style arguments (args[0] is the program name).
// Standard output of commands goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tmachine::cli
