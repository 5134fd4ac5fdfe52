#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "commute/dwell.hpp"
#include "commute/geo.hpp"
#include "commute/outcome.hpp"
#include "commute/portfolio.hpp"

namespace commute {

struct HomeWorkAssignment {
  std::string user_id;
  LocationId home{};
  LocationId work{};
  double night_share = 0.0;  // of total night dwell, at home
  double day_share = 0.0;    // of total day dwell, at work
};

enum class HomeWorkReject {
  insufficient_data,   // no night or no day dwell at all
  no_home_candidate,   // night share fails, day share passes
  no_work_candidate,   // day share fails, night share passes
  insufficient_share,  // both fail
};
std::string_view reject_name(HomeWorkReject r);

// Home is the maximum-night-dwell location and work the maximum-day-dwell
// location, each accepted only with strictly more than share_threshold of
// that period's total. Home may equal work; the distance floor drops those.
Outcome<HomeWorkAssignment, HomeWorkReject> infer_home_work(const DwellPortfolio& portfolio,
                                                            double share_threshold = 0.5);

struct CommuteDistanceOptions {
  double min_commute_km = 1.0;
  std::optional<double> crow_fly_factor;  // applied into corrected_km only
};

struct CommuteDistanceRecord {
  std::string user_id;
  double distance_km = 0.0;
  std::optional<double> corrected_km;
};

// nullopt when the great-circle distance is below the floor. Throws DataError
// if home or work is not in the registry.
std::optional<CommuteDistanceRecord> commute_distance(const HomeWorkAssignment& assignment,
                                                      const TowerRegistry& registry,
                                                      const CommuteDistanceOptions& options = {});

enum class GyrationWeighting { dwell, visits };

// Root-mean-square great-circle distance of visited locations from their
// weighted centroid (centroid taken in a local projection). Dwell weighting
// uses interval durations; visit weighting counts each interval once.
double radius_of_gyration(std::span<const DwellInterval> intervals, const TowerRegistry& registry,
                          GyrationWeighting weighting = GyrationWeighting::dwell);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double density = 0.0;  // count / (n * width); integrates to 1
};

struct CdfPoint {
  double x = 0.0;
  double cumulative = 0.0;  // fraction of samples <= x
};

struct DistanceDistribution {
  double bin_width_km = 1.0;
  std::size_t n = 0;
  double mean_km = 0.0;
  std::vector<HistogramBin> pdf;
  std::vector<CdfPoint> cdf;  // one point per distinct value
};

// Density histogram over [0, (floor(max / width) + 1) * width) plus the exact
// empirical CDF. Throws DataError on an empty input or non-positive width.
DistanceDistribution distance_population(std::span<const CommuteDistanceRecord> records,
                                         double bin_width_km);

// Shared by every histogram in the pipeline.
std::vector<HistogramBin> density_histogram(std::span<const double> values, double lo, double width,
                                            std::size_t bins);
std::vector<CdfPoint> empirical_cdf(std::vector<double> values);

}  // namespace commute
