#pragma once
// Command-line front end. Exposed as a function so tests can drive it
// in-process.

#include <iosfwd>

namespace conetest {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

/// Parses argv (argv[0] is the program name), runs the subcommand and
/// returns the process exit status. Reports go to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace conetest
