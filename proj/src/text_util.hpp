#pragma once

// Helpers for the line-oriented `key=value` formats.

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "opstat/error.hpp"

namespace opstat::detail {

struct KeyValue {
  std::string_view key;
  std::string_view value;
};

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline KeyValue split_kv(std::string_view token, std::size_t line_no) {
  const auto eq = token.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ParseError(line_no, std::string(token), "expected key=value");
  }
  return {token.substr(0, eq), token.substr(eq + 1)};
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

inline bool parse_u64(std::string_view s, std::uint64_t& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

inline bool parse_i64(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

inline double require_double(const KeyValue& kv, std::size_t line_no) {
  double v = 0.0;
  if (!parse_double(kv.value, v)) {
    throw ParseError(line_no, std::string(kv.key), "not a number: '" + std::string(kv.value) + "'");
  }
  return v;
}

inline std::uint64_t require_u64(const KeyValue& kv, std::size_t line_no) {
  std::uint64_t v = 0;
  if (!parse_u64(kv.value, v)) {
    throw ParseError(line_no, std::string(kv.key),
                     "not a non-negative integer: '" + std::string(kv.value) + "'");
  }
  return v;
}

inline bool skippable(std::string_view line) {
  for (char c : line) {
    if (c == '#') return true;
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

}  // namespace opstat::detail
