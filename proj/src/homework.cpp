#include "commute/homework.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "commute/error.hpp"

namespace commute {

std::string_view reject_name(HomeWorkReject r) {
  switch (r) {
    case HomeWorkReject::insufficient_data: return "insufficient_data";
    case HomeWorkReject::no_home_candidate: return "no_home_candidate";
    case HomeWorkReject::no_work_candidate: return "no_work_candidate";
    case HomeWorkReject::insufficient_share: return "insufficient_share";
  }
  return "unknown";
}

Outcome<HomeWorkAssignment, HomeWorkReject> infer_home_work(const DwellPortfolio& portfolio,
                                                            double share_threshold) {
  const std::int64_t night_total = portfolio.total_night();
  const std::int64_t day_total = portfolio.total_day();
  if (night_total <= 0 || day_total <= 0) return HomeWorkReject::insufficient_data;

  // Entries are already in deterministic rank order, so the first maximum wins.
  const PortfolioEntry* home = nullptr;
  const PortfolioEntry* work = nullptr;
  for (const auto& e : portfolio.entries) {
    if (!home || e.night_seconds > home->night_seconds) home = &e;
    if (!work || e.day_seconds > work->day_seconds) work = &e;
  }
  const double night_share = static_cast<double>(home->night_seconds) / night_total;
  const double day_share = static_cast<double>(work->day_seconds) / day_total;
  const bool home_ok = night_share > share_threshold;
  const bool work_ok = day_share > share_threshold;
  if (!home_ok && !work_ok) return HomeWorkReject::insufficient_share;
  if (!home_ok) return HomeWorkReject::no_home_candidate;
  if (!work_ok) return HomeWorkReject::no_work_candidate;
  return HomeWorkAssignment{portfolio.user_id, home->location, work->location, night_share,
                            day_share};
}

std::optional<CommuteDistanceRecord> commute_distance(const HomeWorkAssignment& assignment,
                                                      const TowerRegistry& registry,
                                                      const CommuteDistanceOptions& options) {
  const double km = haversine_km(registry.position(assignment.home), registry.position(assignment.work));
  if (km < options.min_commute_km) return std::nullopt;
  CommuteDistanceRecord record{assignment.user_id, km, std::nullopt};
  if (options.crow_fly_factor) record.corrected_km = km * *options.crow_fly_factor;
  return record;
}

double radius_of_gyration(std::span<const DwellInterval> intervals, const TowerRegistry& registry,
                          GyrationWeighting weighting) {
  std::map<LocationId, double> weights;
  for (const auto& iv : intervals) {
    const double w = weighting == GyrationWeighting::dwell ? static_cast<double>(iv.duration()) : 1.0;
    if (w > 0.0) weights[iv.location] += w;
  }
  if (weights.size() < 2) return 0.0;

  const LocalProjection projection(registry.position(weights.begin()->first));
  double total = 0.0, east = 0.0, north = 0.0;
  for (const auto& [loc, w] : weights) {
    const auto xy = projection.forward(registry.position(loc));
    east += w * xy.east_km;
    north += w * xy.north_km;
    total += w;
  }
  const LatLon centroid = projection.inverse({east / total, north / total});

  double sum = 0.0;
  for (const auto& [loc, w] : weights) {
    const double d = haversine_km(registry.position(loc), centroid);
    sum += w * d * d;
  }
  return std::sqrt(sum / total);
}

std::vector<HistogramBin> density_histogram(std::span<const double> values, double lo, double width,
                                            std::size_t bins) {
  std::vector<HistogramBin> out(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    out[i].lo = lo + width * static_cast<double>(i);
    out[i].hi = lo + width * static_cast<double>(i + 1);
  }
  std::size_t counted = 0;
  for (double v : values) {
    const double pos = (v - lo) / width;
    if (pos < 0.0) continue;
    const auto idx = static_cast<std::size_t>(std::floor(pos));
    if (idx >= bins) continue;
    ++out[idx].count;
    ++counted;
  }
  if (counted > 0) {
    for (auto& b : out) b.density = static_cast<double>(b.count) / (static_cast<double>(counted) * width);
  }
  return out;
}

std::vector<CdfPoint> empirical_cdf(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<CdfPoint> out;
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    out.push_back(CdfPoint{values[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

DistanceDistribution distance_population(std::span<const CommuteDistanceRecord> records,
                                         double bin_width_km) {
  if (records.empty()) throw DataError("distance distribution needs at least one record");
  if (!(bin_width_km > 0.0)) throw DataError("bin width must be positive");
  std::vector<double> values;
  values.reserve(records.size());
  double sum = 0.0;
  for (const auto& r : records) {
    values.push_back(r.distance_km);
    sum += r.distance_km;
  }
  DistanceDistribution out;
  out.bin_width_km = bin_width_km;
  out.n = values.size();
  out.mean_km = sum / static_cast<double>(values.size());
  const double max = *std::max_element(values.begin(), values.end());
  // +1 so a value landing exactly on the top edge still has a bin
  const auto bins = static_cast<std::size_t>(std::floor(max / bin_width_km)) + 1;
  out.pdf = density_histogram(values, 0.0, bin_width_km, bins);
  out.cdf = empirical_cdf(std::move(values));
  return out;
}

}  // namespace commute
