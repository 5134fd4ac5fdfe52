#include <doctest.h>

#include <random>
#include <sstream>

#include "commute/config.hpp"
#include "commute/csv.hpp"
#include "commute/error.hpp"
#include "commute/time.hpp"

using namespace commute;

namespace {

// Zeller's congruence, Monday = 0.
int zeller_weekday(int y, int m, int d) {
  if (m < 3) {
    m += 12;
    y -= 1;
  }
  const int k = y % 100, j = y / 100;
  const int h = (d + 13 * (m + 1) / 5 + k + k / 4 + j / 4 + 5 * j) % 7;  // 0 = Saturday
  return (h + 5) % 7;
}

// Days since 1970-01-01 by counting whole years and months.
std::int64_t count_days(int y, int m, int d) {
  auto leap = [](int yr) { return (yr % 4 == 0 && yr % 100 != 0) || yr % 400 == 0; };
  static const int month_days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  std::int64_t days = 0;
  for (int yr = 1970; yr < y; ++yr) days += leap(yr) ? 366 : 365;
  for (int yr = y; yr < 1970; ++yr) days -= leap(yr) ? 366 : 365;
  for (int mo = 1; mo < m; ++mo) days += month_days[mo - 1] + (mo == 2 && leap(y));
  return days + d - 1;
}

}  // namespace

TEST_CASE("floor division rounds toward negative infinity") {
  CHECK(floor_div(7, 2) == 3);
  CHECK(floor_div(-7, 2) == -4);
  CHECK(floor_div(-8, 2) == -4);
  CHECK(floor_mod(-1, 86400) == 86399);
  CHECK(time_of_day(-1) == 86399);
  CHECK(day_index(-1) == -1);
}

TEST_CASE("calendar conversions agree with counting oracles") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> year(1901, 2099), month(1, 12), day(1, 28);
  for (int i = 0; i < 2000; ++i) {
    const int y = year(rng), m = month(rng), d = day(rng);
    char text[16];
    std::snprintf(text, sizeof text, "%04d-%02d-%02d", y, m, d);
    const auto parsed = parse_date(text);
    REQUIRE(parsed);
    CHECK(*parsed == count_days(y, m, d));
    CHECK(static_cast<int>(weekday_of_day(*parsed)) == zeller_weekday(y, m, d));
    CHECK(format_date(*parsed) == text);
  }
  CHECK(weekday_of_day(19723) == Weekday::Monday);  // 2024-01-01
}

TEST_CASE("ISO local timestamps parse strictly and round-trip") {
  const auto t = parse_iso_local("2024-01-01T08:30:15");
  REQUIRE(t);
  CHECK(*t == 19723 * 86400 + 8 * 3600 + 30 * 60 + 15);
  CHECK(format_iso_local(*t) == "2024-01-01T08:30:15");
  CHECK(format_iso_local(-1) == "1969-12-31T23:59:59");
  CHECK_FALSE(parse_iso_local("2024-01-01 08:30:15"));
  CHECK_FALSE(parse_iso_local("2024-02-30T08:30:15"));
  CHECK_FALSE(parse_iso_local("2024-01-01T24:00:00"));
  CHECK_FALSE(parse_iso_local("2024-01-01T08:30"));
  CHECK_FALSE(parse_iso_local("2024-01-01T08:30:15Z"));
}

TEST_CASE("time of day parsing") {
  CHECK(parse_time_of_day("08:00") == 8 * 3600);
  CHECK(parse_time_of_day("20:00:30") == 20 * 3600 + 30);
  CHECK(parse_time_of_day("24:00") == 86400);
  CHECK_FALSE(parse_time_of_day("24:01"));
  CHECK_FALSE(parse_time_of_day("8:00"));
  CHECK(format_time_of_day(8 * 3600) == "08:00");
  CHECK(format_time_of_day(8 * 3600 + 5) == "08:00:05");
}

TEST_CASE("weekday names") {
  CHECK(parse_weekday("thu") == Weekday::Thursday);
  CHECK(parse_weekday("Saturday") == Weekday::Saturday);
  CHECK_FALSE(parse_weekday("Thurs"));
  CHECK(weekday_name(Weekday::Sunday) == "Sunday");
}

TEST_CASE("csv helpers") {
  const auto f = csv::split("a,,b\r");
  REQUIRE(f.size() == 3);
  CHECK(f[1].empty());
  CHECK(f[2] == "b");
  CHECK(csv::parse_double("+1.5") == 1.5);
  CHECK_FALSE(csv::parse_double("1.5x"));
  CHECK_FALSE(csv::parse_double(""));
  CHECK(csv::parse_int("-42") == -42);
  CHECK(csv::fixed(-0.0000001, 3) == "0.000");
  CHECK(csv::header_matches("\xEF\xBB\xBFtower_id,lat,lon\r", "tower_id,lat,lon"));

  std::istringstream in("a\n\n  \nb\n");
  csv::LineReader reader(in);
  std::string line;
  REQUIRE(reader.next(line));
  CHECK(line == "a");
  REQUIRE(reader.next(line));
  CHECK(line == "b");
  CHECK(reader.line_number() == 4);
  CHECK_FALSE(reader.next(line));
}

TEST_CASE("key = value config") {
  auto kv = KeyValues::parse("# comment\nalpha = 1\n beta=two words \n\n");
  CHECK(kv.take("alpha") == "1");
  CHECK(kv.take("beta") == "two words");
  CHECK_FALSE(kv.take("gamma"));
  CHECK_NOTHROW(kv.reject_unconsumed("test"));

  auto extra = KeyValues::parse("alpha = 1\nzeta = 2\n");
  extra.take("alpha");
  CHECK_THROWS_AS(extra.reject_unconsumed("test"), ConfigError);
  CHECK_THROWS_AS(KeyValues::parse("no equals sign"), ConfigError);
  CHECK_THROWS_AS(config_double("x", "abc"), ConfigError);
  CHECK(config_bool("x", "true"));
  CHECK_FALSE(config_bool("x", "0"));

  auto base = KeyValues::parse("a = 1\nb = 2\n");
  base.merge(KeyValues::parse("b = 3\n"));
  CHECK(base.take("b") == "3");
}
