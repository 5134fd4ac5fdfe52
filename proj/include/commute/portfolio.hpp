#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "commute/dwell.hpp"
#include "commute/geo.hpp"

namespace commute {

// Day is [day_start, night_start); night wraps midnight.
struct DayNightWindow {
  TimeOfDay day_start = 8 * kSecondsPerHour;
  TimeOfDay night_start = 20 * kSecondsPerHour;

  void validate() const;
};

struct DayNightSplit {
  std::int64_t day_seconds = 0;
  std::int64_t night_seconds = 0;

  friend bool operator==(const DayNightSplit&, const DayNightSplit&) = default;
};

// Exact (integer-second) measure of the interval's overlap with the day and
// night windows over every threshold crossing.
DayNightSplit split_day_night(const DwellInterval& iv, const DayNightWindow& window = {});

struct PortfolioEntry {
  int rank = 0;  // 1-based
  LocationId location{};
  std::int64_t day_seconds = 0;
  std::int64_t night_seconds = 0;
  std::int64_t total_seconds = 0;
};

// A user's locations ranked by total dwell, descending; ties by ascending
// location id string.
struct DwellPortfolio {
  std::string user_id;
  std::vector<PortfolioEntry> entries;

  std::int64_t total_day() const;
  std::int64_t total_night() const;
  std::int64_t total() const { return total_day() + total_night(); }
};

DwellPortfolio accumulate_dwell(std::string user_id, std::span<const DwellInterval> intervals,
                                const TowerRegistry& registry, const DayNightWindow& window = {});

// Distinct calendar days overlapped by at least one interval.
int count_observed_days(std::span<const DwellInterval> intervals);

enum class Period { Day, Night };
std::string_view period_name(Period p);

struct RankPoint {
  int rank = 0;
  double mean_dwell = 0.0;  // seconds per user per observed day
  std::size_t users = 0;    // users possessing this rank
};

struct RankCurve {
  Period period = Period::Day;
  std::vector<RankPoint> points;  // ascending rank

  const RankPoint* at_rank(int rank) const;
};

// Each user's locations are re-ranked by the period's own dwell (locations
// with none in that period hold no rank), then rank r averages
// dwell / observed_days over the users holding rank r. max_rank = 0 keeps all.
RankCurve population_rank_curve(std::span<const DwellPortfolio> portfolios, Period period,
                                std::span<const int> observed_days, const TowerRegistry& registry,
                                int max_rank = 0);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rss = 0.0;  // residual sum of squares in log space
  std::size_t points = 0;
};

// OLS of ln(mean_dwell) on ln(rank) over ranks in [r_min, r_max]. Throws
// DataError for fewer than three points or a non-positive dwell in range.
LogLogFit loglog_slope(const RankCurve& curve, int r_min, int r_max);

}  // namespace commute
