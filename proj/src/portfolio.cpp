#include "commute/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "commute/error.hpp"

namespace commute {
namespace {

// Day-window seconds in [0, t) counted from the epoch; differences of this
// give exact overlaps for any interval.
std::int64_t cumulative_day_seconds(LocalTime t, const DayNightWindow& w) {
  const std::int64_t per_day = w.night_start - w.day_start;
  const std::int64_t days = floor_div(t, kSecondsPerDay);
  const std::int64_t partial = std::clamp<std::int64_t>(time_of_day(t) - w.day_start, 0, per_day);
  return days * per_day + partial;
}

}  // namespace

void DayNightWindow::validate() const {
  if (!(0 <= day_start && day_start < night_start && night_start <= kSecondsPerDay)) {
    throw ConfigError("day_start must precede night_start within one day");
  }
}

DayNightSplit split_day_night(const DwellInterval& iv, const DayNightWindow& window) {
  const std::int64_t day =
      cumulative_day_seconds(iv.end, window) - cumulative_day_seconds(iv.start, window);
  return {day, iv.duration() - day};
}

std::int64_t DwellPortfolio::total_day() const {
  std::int64_t sum = 0;
  for (const auto& e : entries) sum += e.day_seconds;
  return sum;
}

std::int64_t DwellPortfolio::total_night() const {
  std::int64_t sum = 0;
  for (const auto& e : entries) sum += e.night_seconds;
  return sum;
}

DwellPortfolio accumulate_dwell(std::string user_id, std::span<const DwellInterval> intervals,
                                const TowerRegistry& registry, const DayNightWindow& window) {
  DwellPortfolio portfolio;
  portfolio.user_id = std::move(user_id);
  std::unordered_map<LocationId, std::size_t> slot;
  for (const auto& iv : intervals) {
    auto [it, inserted] = slot.try_emplace(iv.location, portfolio.entries.size());
    if (inserted) portfolio.entries.push_back(PortfolioEntry{0, iv.location, 0, 0, 0});
    auto& entry = portfolio.entries[it->second];
    const auto split = split_day_night(iv, window);
    entry.day_seconds += split.day_seconds;
    entry.night_seconds += split.night_seconds;
    entry.total_seconds += iv.duration();
  }
  std::sort(portfolio.entries.begin(), portfolio.entries.end(),
            [&](const PortfolioEntry& a, const PortfolioEntry& b) {
              if (a.total_seconds != b.total_seconds) return a.total_seconds > b.total_seconds;
              return registry.id_less(a.location, b.location);
            });
  for (std::size_t i = 0; i < portfolio.entries.size(); ++i) {
    portfolio.entries[i].rank = static_cast<int>(i) + 1;
  }
  return portfolio;
}

int count_observed_days(std::span<const DwellInterval> intervals) {
  std::set<std::int64_t> days;
  for (const auto& iv : intervals) {
    if (iv.duration() <= 0) continue;
    for (std::int64_t d = day_index(iv.start); d <= day_index(iv.end - 1); ++d) days.insert(d);
  }
  return static_cast<int>(days.size());
}

std::string_view period_name(Period p) { return p == Period::Day ? "day" : "night"; }

const RankPoint* RankCurve::at_rank(int rank) const {
  for (const auto& p : points) {
    if (p.rank == rank) return &p;
  }
  return nullptr;
}

RankCurve population_rank_curve(std::span<const DwellPortfolio> portfolios, Period period,
                                std::span<const int> observed_days, const TowerRegistry& registry,
                                int max_rank) {
  if (observed_days.size() != portfolios.size()) {
    throw DataError("observed_days must have one entry per portfolio");
  }
  RankCurve curve;
  curve.period = period;
  std::vector<double> sums;
  std::vector<std::size_t> counts;

  std::vector<std::pair<std::int64_t, LocationId>> ranked;
  for (std::size_t u = 0; u < portfolios.size(); ++u) {
    if (portfolios[u].entries.empty()) continue;
    if (observed_days[u] < 1) throw DataError("observed_days must be at least 1");
    ranked.clear();
    for (const auto& e : portfolios[u].entries) {
      const std::int64_t dwell = period == Period::Day ? e.day_seconds : e.night_seconds;
      if (dwell > 0) ranked.emplace_back(dwell, e.location);
    }
    std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return registry.id_less(a.second, b.second);
    });
    std::size_t limit = ranked.size();
    if (max_rank > 0) limit = std::min(limit, static_cast<std::size_t>(max_rank));
    if (sums.size() < limit) {
      sums.resize(limit, 0.0);
      counts.resize(limit, 0);
    }
    for (std::size_t r = 0; r < limit; ++r) {
      sums[r] += static_cast<double>(ranked[r].first) / observed_days[u];
      ++counts[r];
    }
  }
  for (std::size_t r = 0; r < sums.size(); ++r) {
    curve.points.push_back(
        RankPoint{static_cast<int>(r) + 1, sums[r] / static_cast<double>(counts[r]), counts[r]});
  }
  return curve;
}

LogLogFit loglog_slope(const RankCurve& curve, int r_min, int r_max) {
  std::vector<double> xs, ys;
  for (const auto& p : curve.points) {
    if (p.rank < r_min || p.rank > r_max) continue;
    if (!(p.mean_dwell > 0.0)) {
      throw DataError("zero dwell at rank " + std::to_string(p.rank) + ": log undefined");
    }
    xs.push_back(std::log(static_cast<double>(p.rank)));
    ys.push_back(std::log(p.mean_dwell));
  }
  if (xs.size() < 3) throw DataError("log-log fit needs at least 3 points");

  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.points = xs.size();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    fit.rss += r * r;
  }
  return fit;
}

}  // namespace commute
