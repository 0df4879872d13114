#pragma once

// Command-line front end: hubbard-scan, momentum, vxc, molecule, decompose.

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace diva::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNotConverged = 3;
inline constexpr int kExitNotRepresentable = 4;

/// Parses "a,b,c" or "start:stop:step" (inclusive stop within step/1e6).
std::vector<double> parse_grid(const std::string& text);

/// Reads "key = value" lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path);

/// Entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace diva::cli
