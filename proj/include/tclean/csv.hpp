#pragma once

#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tclean::csv {

/// Splits an unquoted CSV line; a trailing '\r' is dropped.
std::vector<std::string_view> split(std::string_view line);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  T value{};
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || p != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

}  // namespace tclean::csv
