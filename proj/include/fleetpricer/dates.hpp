#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace fleetpricer {

/// Calendar day as an offset from an epoch (1970-01-01 unless a scenario
/// says otherwise). Arithmetic stays in days; ISO-8601 only at I/O.
struct Date {
  std::int32_t days = 0;

  constexpr Date() = default;
  constexpr explicit Date(std::int32_t d) : days(d) {}

  friend constexpr auto operator<=>(Date, Date) = default;
  friend constexpr Date operator+(Date d, std::int32_t n) { return Date(d.days + n); }
  friend constexpr Date operator-(Date d, std::int32_t n) { return Date(d.days - n); }
  friend constexpr std::int32_t operator-(Date a, Date b) { return a.days - b.days; }
};

/// "YYYY-MM-DD"; throws Error(SchemaError) on malformed or impossible dates.
Date parse_iso_date(std::string_view text);
std::string format_iso_date(Date d);

}  // namespace fleetpricer
