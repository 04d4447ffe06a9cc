#pragma once

#include <string>
#include <string_view>

#include "pdmp/models.hpp"

namespace pdmp::detail {

/// Parses a full-string decimal number; errors mention the key and line.
double parse_double(std::string_view text, std::string_view key, int line);

/// Shortest form that still round-trips: printf "%.17g".
std::string format_double(double value);

/// Splits `key = value` lines; `#` starts a comment. Duplicate keys and lines
/// without `=` are errors carrying the line number.
KeyValues parse_key_values(std::string_view text);

std::string_view trim(std::string_view s);

}  // namespace pdmp::detail
