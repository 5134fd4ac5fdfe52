#include "commute/timing.hpp"

#include <algorithm>
#include <cmath>

#include "commute/csv.hpp"
#include "commute/error.hpp"
#include "commute/stats.hpp"

namespace commute {
namespace {

double minutes_of_day(LocalTime t) {
  return static_cast<double>(time_of_day(t)) / kSecondsPerMinute;
}

CommuteSample make_sample(std::string_view user_id, Leg leg, LocalTime depart, LocalTime arrive,
                          double distance_km) {
  CommuteSample s;
  s.user_id = std::string(user_id);
  s.day = day_index(depart);
  s.leg = leg;
  s.depart = depart;
  s.arrive = arrive;
  s.duration_min = static_cast<double>(arrive - depart) / kSecondsPerMinute;
  s.distance_km = distance_km;
  return s;
}

}  // namespace

std::string_view leg_name(Leg leg) { return leg == Leg::morning ? "morning" : "evening"; }

std::string_view reject_name(CommuteReject r) {
  switch (r) {
    case CommuteReject::no_home_call: return "no_home_call";
    case CommuteReject::no_work_call: return "no_work_call";
    case CommuteReject::inverted_order: return "inverted_order";
  }
  return "unknown";
}

void TimingConfig::validate() const {
  if (noon <= 0 || noon >= kSecondsPerDay) throw ConfigError("noon must fall inside the day");
  for (const auto* w : {&morning_window, &evening_window}) {
    if (!(0 <= w->start && w->start < w->end && w->end <= kSecondsPerDay)) {
      throw ConfigError("frequent-caller windows must be non-empty and within one day");
    }
  }
  if (min_call_rate < 0.0) throw ConfigError("min_call_rate must not be negative");
}

bool is_frequent_caller(std::span<const CallEvent> day_events, const TimeWindow& window,
                        double min_rate) {
  if (min_rate <= 0.0) return true;
  const auto calls = std::count_if(day_events.begin(), day_events.end(), [&](const CallEvent& e) {
    return window.contains(time_of_day(e.time));
  });
  return static_cast<double>(calls) >= min_rate * window.hours();
}

Outcome<CommuteSample, CommuteReject> morning_commute(std::string_view user_id,
                                                      std::span<const CallEvent> day_events,
                                                      const HomeWorkAssignment& hw,
                                                      double distance_km, const TimingConfig& cfg) {
  std::optional<LocalTime> last_home, first_work;
  for (const auto& e : day_events) {
    if (time_of_day(e.time) >= cfg.noon) continue;
    if (e.location == hw.home) last_home = e.time;
    if (e.location == hw.work && !first_work) first_work = e.time;
  }
  if (!last_home) return CommuteReject::no_home_call;
  if (!first_work) return CommuteReject::no_work_call;
  if (!(*last_home < *first_work)) return CommuteReject::inverted_order;
  return make_sample(user_id, Leg::morning, *last_home, *first_work, distance_km);
}

Outcome<CommuteSample, CommuteReject> evening_commute(std::string_view user_id,
                                                      std::span<const CallEvent> day_events,
                                                      const HomeWorkAssignment& hw,
                                                      double distance_km, const TimingConfig& cfg) {
  std::optional<LocalTime> first_home;
  bool any_work = false;
  for (const auto& e : day_events) {
    if (time_of_day(e.time) < cfg.noon) continue;
    if (e.location == hw.home && !first_home) first_home = e.time;
    if (e.location == hw.work) any_work = true;
  }
  if (!first_home) return CommuteReject::no_home_call;
  if (!any_work) return CommuteReject::no_work_call;

  std::optional<LocalTime> last_work;
  for (const auto& e : day_events) {
    if (time_of_day(e.time) < cfg.noon || e.time >= *first_home) continue;
    if (e.location == hw.work) last_work = e.time;
  }
  if (!last_work) return CommuteReject::inverted_order;
  auto sample = make_sample(user_id, Leg::evening, *last_work, *first_home, distance_km);
  sample.flagged = time_of_day(*first_home) < cfg.plausibility_cutoff;
  return sample;
}

DistanceBins DistanceBins::timing_preset() { return {{0.0, 2.5, 5.0, 10.0, 20.0, 50.0}}; }
DistanceBins DistanceBins::duration_preset() { return {{0.0, 5.0, 10.0, 20.0, 40.0, 80.0}}; }

DistanceBins DistanceBins::parse(std::string_view text) {
  DistanceBins bins;
  for (auto field : csv::split(csv::trim(text))) {
    const auto v = csv::parse_double(field);
    if (!v) throw ConfigError("bin edges must be numbers: '" + std::string(text) + "'");
    bins.edges.push_back(*v);
  }
  bins.validate();
  return bins;
}

void DistanceBins::validate() const {
  if (edges.size() < 2) throw ConfigError("distance bins need at least two edges");
  if (edges.front() < 0.0) throw ConfigError("distance bin edges must not be negative");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw ConfigError("distance bin edges must be strictly ascending");
  }
}

int DistanceBins::bin_of(double km) const {
  if (edges.size() < 2 || km < edges.front() || km >= edges.back()) return -1;
  const auto it = std::upper_bound(edges.begin(), edges.end(), km);
  return static_cast<int>(it - edges.begin()) - 1;
}

std::string DistanceBins::label(std::size_t i) const {
  auto fmt = [](double v) {
    auto s = csv::fixed(v, 3);
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return s;
  };
  return fmt(edges.at(i)) + "-" + fmt(edges.at(i + 1));
}

std::string DistanceBins::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (i) out += ",";
    auto s = csv::fixed(edges[i], 3);
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    out += s;
  }
  return out;
}

std::vector<std::vector<double>> proxy_minutes_by_bin(std::span<const CommuteSample> samples,
                                                      const DistanceBins& bins, Leg leg,
                                                      Proxy which) {
  std::vector<std::vector<double>> out(bins.size());
  for (const auto& s : samples) {
    if (s.leg != leg) continue;
    const int b = bins.bin_of(s.distance_km);
    if (b >= 0) out[static_cast<std::size_t>(b)].push_back(minutes_of_day(s.proxy(which)));
  }
  return out;
}

std::vector<TimeHistogram> timing_distribution(std::span<const CommuteSample> samples,
                                               const DistanceBins& bins, Leg leg, Proxy which) {
  const auto per_bin = proxy_minutes_by_bin(samples, bins, leg, which);
  constexpr auto kBuckets = static_cast<std::size_t>(24 * 60 / kBucketMinutes);
  std::vector<TimeHistogram> out;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    TimeHistogram h;
    h.lo_km = bins.edges[b];
    h.hi_km = bins.edges[b + 1];
    h.n = per_bin[b].size();
    if (h.n > 0) h.buckets = density_histogram(per_bin[b], 0.0, kBucketMinutes, kBuckets);
    out.push_back(std::move(h));
  }
  return out;
}

std::vector<BinSummary> duration_by_bin(std::span<const CommuteSample> samples,
                                        const DistanceBins& bins, Leg leg, bool include_flagged) {
  std::vector<std::vector<double>> durations(bins.size());
  for (const auto& s : samples) {
    if (s.leg != leg || (s.flagged && !include_flagged)) continue;
    const int b = bins.bin_of(s.distance_km);
    if (b >= 0) durations[static_cast<std::size_t>(b)].push_back(s.duration_min);
  }
  std::vector<BinSummary> out;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    BinSummary summary;
    summary.lo_km = bins.edges[b];
    summary.hi_km = bins.edges[b + 1];
    const auto& d = durations[b];
    summary.n = d.size();
    if (!d.empty()) {
      summary.mean_min = stats::mean(d);
      if (d.size() >= 2) {
        summary.stderr_min = stats::sample_stddev(d) / std::sqrt(static_cast<double>(d.size()));
      }
      const double max = *std::max_element(d.begin(), d.end());
      const auto buckets = static_cast<std::size_t>(std::floor(max / kBucketMinutes)) + 1;
      summary.pdf = density_histogram(d, 0.0, kBucketMinutes, buckets);
      summary.cdf = empirical_cdf(d);
    }
    out.push_back(std::move(summary));
  }
  return out;
}

}  // namespace commute
