#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace optstop {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kJsonSchemaVersion = 1;

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitIo = 3,
  kExitNumerical = 4,
};

/// Runs the command line `args` (without the program name). Results go to
/// `out` unless redirected with --out; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Shortest "%.{digits}g" rendering; 17 digits round-trips any double.
std::string format_number(double value, int digits = 17);

}  // namespace optstop
