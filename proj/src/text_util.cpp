#include "text_util.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>

#include "pdmp/error.hpp"

namespace pdmp::detail {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text, std::string_view key, int line) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || end != text.data() + text.size()) {
    std::string where = line > 0 ? "line " + std::to_string(line) + ": " : "";
    fail(ErrorCode::parse_error, where + "`" + std::string(key) + "` expects a number, got `" + std::string(text) + "`");
  }
  return value;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": expected `key = value`");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) fail(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": empty key");
    if (value.empty())
      fail(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": empty value for `" + key + "`");
    if (out.count(key))
      fail(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": duplicate key `" + key + "`");
    out.emplace(key, ConfigValue{value, line_no});
  }
  return out;
}

}  // namespace pdmp::detail
