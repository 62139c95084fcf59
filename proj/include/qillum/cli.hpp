#pragma once

// Command-line front end over the experiment runner.

#include <iosfwd>

namespace qillum::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;  ///< a check ran to completion and failed
inline constexpr int kExitConfig = 2;
inline constexpr int kExitConvergence = 3;

/// Subcommands: sweep, generaldyne, perturb, squeezed, concavity, theorem1,
/// show-config. Returns the process exit code.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int cli_main(int argc, const char* const* argv);

}  // namespace qillum::cli
