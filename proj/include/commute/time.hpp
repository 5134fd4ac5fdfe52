#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace commute {

// Seconds since 1970-01-01T00:00:00 on the local wall clock. No timezone or
// DST arithmetic is ever applied; every threshold is wall-clock.
using LocalTime = std::int64_t;

// Seconds since local midnight, in [0, 86400).
using TimeOfDay = std::int64_t;

inline constexpr std::int64_t kSecondsPerMinute = 60;
inline constexpr std::int64_t kSecondsPerHour = 3600;
inline constexpr std::int64_t kSecondsPerDay = 86400;

enum class Weekday { Monday, Tuesday, Wednesday, Thursday, Friday, Saturday, Sunday };

constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

constexpr std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
  return a - floor_div(a, b) * b;
}

// Day number (days since 1970-01-01) containing t.
constexpr std::int64_t day_index(LocalTime t) { return floor_div(t, kSecondsPerDay); }
constexpr TimeOfDay time_of_day(LocalTime t) { return floor_mod(t, kSecondsPerDay); }
constexpr LocalTime day_start(std::int64_t day) { return day * kSecondsPerDay; }

Weekday weekday_of_day(std::int64_t day);
inline Weekday weekday_of(LocalTime t) { return weekday_of_day(day_index(t)); }

std::optional<Weekday> parse_weekday(std::string_view name);
std::string_view weekday_name(Weekday w);

// Strict `YYYY-MM-DDTHH:MM:SS`.
std::optional<LocalTime> parse_iso_local(std::string_view text);
std::string format_iso_local(LocalTime t);

// `YYYY-MM-DD` for a day number.
std::string format_date(std::int64_t day);
std::optional<std::int64_t> parse_date(std::string_view text);

// `HH:MM` or `HH:MM:SS`; 24:00 is accepted as end-of-day.
std::optional<TimeOfDay> parse_time_of_day(std::string_view text);
std::string format_time_of_day(TimeOfDay t);

}  // namespace commute
