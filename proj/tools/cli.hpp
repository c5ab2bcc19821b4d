#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xmodal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs the command line `args` (without the program name). Machine-readable
/// output goes to `out`, human summaries and errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace xmodal::cli
