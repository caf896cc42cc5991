#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tunnelwatch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDataError = 2;

/// Runs one subcommand. `args` excludes the program name. Normal output goes to
/// `out`, diagnostics and usage text to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Default seed: TUNNELWATCH_SEED if set to an unsigned integer, else 42.
unsigned long long default_seed();

} // namespace tunnelwatch::cli
