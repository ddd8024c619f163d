#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace bsdr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line `args` (without the program name). Results go to
/// files in the output directory; diagnostics and usage text go to `err`.
int run(const std::vector<std::string>& args, std::ostream& err);

}  // namespace bsdr::cli
