#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tripscale::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2 };

/// Entry point of the `tripscale` tool. Subcommands: plan, simulate, embed,
/// evaluate, sweep-dims, floor, ingest-ekman, serve. Diagnostics go to `err`;
/// `out` carries data (plan always, other commands with --stdout).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Rounds to `digits` significant figures, half away from zero.
double round_significant(double value, int digits);

}  // namespace tripscale::cli
