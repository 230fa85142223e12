#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mbfuse {

/// Significant digits used for every real written to a text file.
inline constexpr int kRealDigits = 9;

/// Shortest "%.9g"-style rendering, locale independent.
std::string format_real(double v);

/// Rounds v to the value that survives a format_real / parse_real trip.
double quantize_real(double v);

/// Strict parsers: the whole field must be consumed. Return false on failure.
bool parse_real(std::string_view s, double& out);
bool parse_int(std::string_view s, std::int64_t& out);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t v);

}  // namespace mbfuse
