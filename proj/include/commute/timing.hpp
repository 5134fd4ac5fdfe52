#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "commute/geo.hpp"
#include "commute/homework.hpp"
#include "commute/outcome.hpp"

namespace commute {

// [start, end) in seconds since midnight.
struct TimeWindow {
  TimeOfDay start = 0;
  TimeOfDay end = kSecondsPerDay;

  double hours() const { return static_cast<double>(end - start) / kSecondsPerHour; }
  bool contains(TimeOfDay t) const { return t >= start && t < end; }
};

enum class Leg { morning, evening };
std::string_view leg_name(Leg leg);

enum class Proxy { depart, arrive };

struct CommuteSample {
  std::string user_id;
  std::int64_t day = 0;  // day index of the user-day
  Leg leg = Leg::morning;
  LocalTime depart = 0;
  LocalTime arrive = 0;
  double duration_min = 0.0;
  double distance_km = 0.0;
  // Evening sample whose arrival proxy falls before the plausibility cutoff.
  bool flagged = false;

  LocalTime proxy(Proxy which) const { return which == Proxy::depart ? depart : arrive; }
};

enum class CommuteReject { no_home_call, no_work_call, inverted_order };
std::string_view reject_name(CommuteReject r);

struct TimingConfig {
  TimeOfDay noon = 12 * kSecondsPerHour;
  TimeWindow morning_window{5 * kSecondsPerHour, 12 * kSecondsPerHour};
  TimeWindow evening_window{12 * kSecondsPerHour, 22 * kSecondsPerHour};
  double min_call_rate = 1.0;  // calls per hour inside the window
  TimeOfDay plausibility_cutoff = 15 * kSecondsPerHour;
  bool exclude_flagged = false;

  void validate() const;
};

// True iff calls inside the window per window hour reach min_rate.
bool is_frequent_caller(std::span<const CallEvent> day_events, const TimeWindow& window,
                        double min_rate);

// Last home call and first work call, both strictly before noon.
Outcome<CommuteSample, CommuteReject> morning_commute(std::string_view user_id,
                                                      std::span<const CallEvent> day_events,
                                                      const HomeWorkAssignment& hw,
                                                      double distance_km,
                                                      const TimingConfig& cfg = {});

// First home call at or after noon, and the last work call at or after noon
// that precedes it.
Outcome<CommuteSample, CommuteReject> evening_commute(std::string_view user_id,
                                                      std::span<const CallEvent> day_events,
                                                      const HomeWorkAssignment& hw,
                                                      double distance_km,
                                                      const TimingConfig& cfg = {});

// Half-open distance bins [edges[i], edges[i + 1]).
struct DistanceBins {
  std::vector<double> edges;

  static DistanceBins timing_preset();    // 0-2.5-5-10-20-50 km
  static DistanceBins duration_preset();  // 0-5-10-20-40-80 km
  static DistanceBins parse(std::string_view text);  // comma-separated edges

  void validate() const;
  std::size_t size() const { return edges.empty() ? 0 : edges.size() - 1; }
  // -1 when outside every bin.
  int bin_of(double km) const;
  std::string label(std::size_t i) const;
  std::string to_string() const;
};

inline constexpr double kBucketMinutes = 10.0;

struct TimeHistogram {
  double lo_km = 0.0;
  double hi_km = 0.0;
  std::size_t n = 0;
  std::vector<HistogramBin> buckets;  // minutes since midnight; empty when n == 0
};

// One density histogram of the chosen proxy's time of day per distance bin.
std::vector<TimeHistogram> timing_distribution(std::span<const CommuteSample> samples,
                                               const DistanceBins& bins, Leg leg, Proxy which);

struct BinSummary {
  double lo_km = 0.0;
  double hi_km = 0.0;
  std::size_t n = 0;
  std::optional<double> mean_min;
  std::optional<double> stderr_min;  // sample sd / sqrt(n); n >= 2 only
  std::vector<HistogramBin> pdf;     // 10-minute duration buckets
  std::vector<CdfPoint> cdf;
};

std::vector<BinSummary> duration_by_bin(std::span<const CommuteSample> samples,
                                        const DistanceBins& bins, Leg leg,
                                        bool include_flagged = true);

// Per-bin proxy times (minutes since midnight), used for peaks and fits.
std::vector<std::vector<double>> proxy_minutes_by_bin(std::span<const CommuteSample> samples,
                                                      const DistanceBins& bins, Leg leg,
                                                      Proxy which);

}  // namespace commute
