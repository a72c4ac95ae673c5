#pragma once

// Locale-independent number formatting and tokenizing shared by the text
// file readers and writers.

#include <array>
#include <charconv>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace ekfslam::text
{

/// Shortest representation that parses back to the same double.
inline void put_number(std::ostream& out, double value)
{
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  out.write(buf.data(), ptr - buf.data());
}

inline std::string format_number(double value)
{
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

inline std::optional<double> parse_number(std::string_view tok)
{
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(value))
  {
    return std::nullopt;
  }
  return value;
}

template <typename Int>
std::optional<Int> parse_integer(std::string_view tok)
{
  Int value{};
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
  {
    return std::nullopt;
  }
  return value;
}

inline std::vector<std::string_view> split(std::string_view line, std::string_view delims = " \t")
{
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size())
  {
    i = line.find_first_not_of(delims, i);
    if (i == std::string_view::npos)
    {
      break;
    }
    const auto end = std::min(line.find_first_of(delims, i), line.size());
    out.push_back(line.substr(i, end - i));
    i = end;
  }
  return out;
}

/// Splits on a single separator, keeping empty fields.
inline std::vector<std::string_view> split_fields(std::string_view line, char sep)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true)
  {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos)
    {
      break;
    }
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
  {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace ekfslam::text
