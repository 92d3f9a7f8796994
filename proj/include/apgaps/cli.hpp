#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "apgaps/modulus.hpp"

namespace apgaps::cli {

inline constexpr const char* kToolName = "apgaps";
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 2;
inline constexpr int kExitResource = 3;
inline constexpr int kExitUsage = 64;

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);

// Flat key=value lines; '#' starts a comment. Keys are long flag names
// without the leading dashes.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

// Plan records as written by `build-q`.
std::string plan_to_json(const ModulusPlan& plan, u64 S_count, u64 T_count);
ModulusPlan plan_from_json(const std::string& text);

// args excludes the program name. Output goes to `out` unless --out is given.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace apgaps::cli
