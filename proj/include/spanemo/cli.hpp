#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spanemo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Subcommands: validate-data, train, eval, predict, analyze-words,
/// analyze-heatmap, analyze-correlations, sweep-alpha.
int run(int argc, char** argv);
/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spanemo::cli
