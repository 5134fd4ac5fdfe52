#include "commute/time.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>

namespace commute {
namespace {

constexpr std::array<std::string_view, 7> kWeekdayNames = {
    "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"};

bool parse_fixed_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
  return ec == std::errc{} && ptr == text.data() + pos + len;
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

}  // namespace

Weekday weekday_of_day(std::int64_t day) {
  const std::chrono::sys_days d{std::chrono::days{day}};
  // iso_encoding: Monday = 1 ... Sunday = 7
  return static_cast<Weekday>(std::chrono::weekday{d}.iso_encoding() - 1);
}

std::optional<Weekday> parse_weekday(std::string_view name) {
  for (std::size_t i = 0; i < kWeekdayNames.size(); ++i) {
    const auto full = kWeekdayNames[i];
    if (name.size() != full.size() && name.size() != 3) continue;
    bool match = true;
    for (std::size_t k = 0; k < name.size(); ++k) {
      if (ascii_lower(name[k]) != ascii_lower(full[k])) {
        match = false;
        break;
      }
    }
    if (match) return static_cast<Weekday>(i);
  }
  return std::nullopt;
}

std::string_view weekday_name(Weekday w) { return kWeekdayNames[static_cast<std::size_t>(w)]; }

std::optional<std::int64_t> parse_date(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!parse_fixed_int(text, 0, 4, y) || !parse_fixed_int(text, 5, 2, m) ||
      !parse_fixed_int(text, 8, 2, d)) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

std::optional<LocalTime> parse_iso_local(std::string_view text) {
  if (text.size() != 19 || text[10] != 'T' || text[13] != ':' || text[16] != ':') {
    return std::nullopt;
  }
  const auto day = parse_date(text.substr(0, 10));
  if (!day) return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!parse_fixed_int(text, 11, 2, hh) || !parse_fixed_int(text, 14, 2, mm) ||
      !parse_fixed_int(text, 17, 2, ss)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
  return day_start(*day) + hh * kSecondsPerHour + mm * kSecondsPerMinute + ss;
}

std::string format_date(std::int64_t day) {
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{day}}};
  char buf[48];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_iso_local(LocalTime t) {
  const TimeOfDay s = time_of_day(t);
  char buf[48];
  std::snprintf(buf, sizeof buf, "T%02lld:%02lld:%02lld", static_cast<long long>(s / 3600),
                static_cast<long long>((s / 60) % 60), static_cast<long long>(s % 60));
  return format_date(day_index(t)) + buf;
}

std::optional<TimeOfDay> parse_time_of_day(std::string_view text) {
  int hh = 0, mm = 0, ss = 0;
  if (text.size() != 5 && text.size() != 8) return std::nullopt;
  if (text[2] != ':' || !parse_fixed_int(text, 0, 2, hh) || !parse_fixed_int(text, 3, 2, mm)) {
    return std::nullopt;
  }
  if (text.size() == 8 && (text[5] != ':' || !parse_fixed_int(text, 6, 2, ss))) {
    return std::nullopt;
  }
  if (mm > 59 || ss > 59) return std::nullopt;
  const TimeOfDay value = hh * kSecondsPerHour + mm * kSecondsPerMinute + ss;
  if (value > kSecondsPerDay) return std::nullopt;
  return value;
}

std::string format_time_of_day(TimeOfDay t) {
  char buf[48];
  if (t % 60 == 0) {
    std::snprintf(buf, sizeof buf, "%02lld:%02lld", static_cast<long long>(t / 3600),
                  static_cast<long long>((t / 60) % 60));
  } else {
    std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld", static_cast<long long>(t / 3600),
                  static_cast<long long>((t / 60) % 60), static_cast<long long>(t % 60));
  }
  return buf;
}

}  // namespace commute
