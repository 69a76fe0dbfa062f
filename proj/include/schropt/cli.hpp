#pragma once

#include <ostream>

namespace schropt {

// Exit codes of the command-line driver.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;

// Subcommands: run, check-gradient, diagnose, mesh-info. Errors go to `err`
// as a single line starting with "error[validation]:", "error[io]:" or
// "error[numerical]:".
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace schropt
