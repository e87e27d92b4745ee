#include "dpcl/duration.hpp"

#include <array>
#include <charconv>
#include <limits>
#include <utility>

#include "dpcl/error.hpp"

namespace dpcl {

namespace {

// Longest suffix first so "min" wins over "m".
constexpr std::array<std::pair<std::string_view, DurationUnit>, 7> kUnits{{
    {"min", DurationUnit::min},
    {"s", DurationUnit::s},
    {"h", DurationUnit::h},
    {"d", DurationUnit::d},
    {"w", DurationUnit::w},
    {"m", DurationUnit::m},
    {"y", DurationUnit::y},
}};

}  // namespace

std::string_view unit_suffix(DurationUnit unit) {
  for (const auto& [suffix, u] : kUnits)
    if (u == unit) return suffix;
  return "";
}

std::optional<DurationUnit> unit_from_suffix(std::string_view suffix) {
  for (const auto& [s, u] : kUnits)
    if (s == suffix) return u;
  return std::nullopt;
}

Ticks duration_to_ticks(const Duration& d) {
  Ticks out = 0;
  if (__builtin_mul_overflow(d.amount, unit_factor(d.unit), &out))
    throw Error(ErrorCode::arithmetic_overflow, "duration " + to_string(d) + " overflows the clock");
  return out;
}

Ticks checked_add(Ticks a, Ticks b) {
  Ticks out = 0;
  if (__builtin_add_overflow(a, b, &out))
    throw Error(ErrorCode::arithmetic_overflow, "tick addition overflows");
  return out;
}

Ticks checked_sub(Ticks a, Ticks b) {
  Ticks out = 0;
  if (__builtin_sub_overflow(a, b, &out))
    throw Error(ErrorCode::arithmetic_overflow, "tick subtraction overflows");
  return out;
}

std::optional<Duration> parse_duration(std::string_view text) {
  std::size_t digits = 0;
  while (digits < text.size() && text[digits] >= '0' && text[digits] <= '9') ++digits;
  if (digits == 0) return std::nullopt;
  Duration d;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + digits, d.amount);
  if (ec != std::errc{} || ptr != text.data() + digits) return std::nullopt;
  auto unit = unit_from_suffix(text.substr(digits));
  if (!unit) return std::nullopt;
  d.unit = *unit;
  return d;
}

std::string to_string(const Duration& d) {
  return std::to_string(d.amount) + std::string(unit_suffix(d.unit));
}

}  // namespace dpcl
