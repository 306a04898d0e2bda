#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace vecchia::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;
inline constexpr int exit_numerical = 3;

/// Runs one command line (without the program name). Artifacts go to files;
/// short summaries go to `out`, errors to `err` as one JSON object per line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a, used for the configuration hash in run stamps.
std::uint64_t fnv1a(std::string_view text);

}  // namespace vecchia::cli
