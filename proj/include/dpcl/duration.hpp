#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace dpcl {

/// Simulated time. One tick is one second.
using Ticks = std::int64_t;

enum class DurationUnit { s, min, h, d, w, m, y };

/// Seconds per unit. Months are 30 days and years 365 days.
constexpr Ticks unit_factor(DurationUnit unit) {
  switch (unit) {
    case DurationUnit::s: return 1;
    case DurationUnit::min: return 60;
    case DurationUnit::h: return 3'600;
    case DurationUnit::d: return 86'400;
    case DurationUnit::w: return 604'800;
    case DurationUnit::m: return 2'592'000;
    case DurationUnit::y: return 31'536'000;
  }
  return 0;
}

std::string_view unit_suffix(DurationUnit unit);
std::optional<DurationUnit> unit_from_suffix(std::string_view suffix);

struct Duration {
  std::int64_t amount = 0;
  DurationUnit unit = DurationUnit::s;

  friend bool operator==(const Duration&, const Duration&) = default;
};

/// amount * unit factor; throws Error(arithmetic_overflow) when the product
/// does not fit in Ticks.
Ticks duration_to_ticks(const Duration& d);

/// Checked tick addition/subtraction.
Ticks checked_add(Ticks a, Ticks b);
Ticks checked_sub(Ticks a, Ticks b);

/// Parses "1m", "30min", "0s". Returns nullopt on malformed input.
std::optional<Duration> parse_duration(std::string_view text);

std::string to_string(const Duration& d);

}  // namespace dpcl
