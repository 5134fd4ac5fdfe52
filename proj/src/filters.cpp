#include "commute/filters.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>

#include "commute/csv.hpp"
#include "commute/error.hpp"

namespace commute {
namespace {

std::int64_t lattice_floor(LocalTime t, std::int64_t step) { return floor_div(t, step) * step; }
std::int64_t lattice_ceil(LocalTime t, std::int64_t step) { return -floor_div(-t, step) * step; }

constexpr double kKmPerDegreeLat = kEarthRadiusKm * 3.14159265358979323846 / 180.0;

}  // namespace

WeekdaySet WeekdaySet::parse(std::string_view text) {
  WeekdaySet set;
  text = csv::trim(text);
  if (text.empty()) return set;
  for (auto field : csv::split(text)) {
    field = csv::trim(field);
    const auto day = parse_weekday(field);
    if (!day) throw ConfigError("unknown weekday '" + std::string(field) + "'");
    set.insert(*day);
  }
  return set;
}

std::string WeekdaySet::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < 7; ++i) {
    if (!bits_.test(i)) continue;
    if (!out.empty()) out += ",";
    out += weekday_name(static_cast<Weekday>(i));
  }
  return out;
}

void FilterConfig::validate() const {
  if (resample_interval_s <= 0) throw ConfigError("resample_interval_minutes must be positive");
  if (!(spatial_radius_km > 0.0)) throw ConfigError("spatial_radius_km must be positive");
  if (!(speed_limit_kmh > 0.0)) throw ConfigError("speed_limit_kmh must be positive");
  if (min_segment_seconds <= 0) throw ConfigError("min_segment_seconds must be positive");
  if (excluded_weekdays.size() > 6) throw ConfigError("excluded_weekdays may name at most six days");
  if (max_gap_s <= 0) throw ConfigError("max_gap_hours must be positive");
  if (max_gap_s <= resample_interval_s) {
    throw ConfigError("max_gap_hours must exceed the resample interval");
  }
  if (!(sparse_tower_km > 0.0)) throw ConfigError("sparse_tower_km must be positive");
  if (!(sparse_dwell_share > 0.0 && sparse_dwell_share < 1.0)) {
    throw ConfigError("sparse_dwell_share must lie in (0, 1)");
  }
}

FilterConfig filter_config_from(KeyValues& kv) {
  FilterConfig cfg;
  if (auto v = kv.take("resample_interval_minutes")) {
    cfg.resample_interval_s =
        std::llround(config_double("resample_interval_minutes", *v) * kSecondsPerMinute);
  }
  if (auto v = kv.take("spatial_radius_km")) cfg.spatial_radius_km = config_double("spatial_radius_km", *v);
  if (auto v = kv.take("speed_limit_kmh")) cfg.speed_limit_kmh = config_double("speed_limit_kmh", *v);
  if (auto v = kv.take("min_segment_seconds")) {
    cfg.min_segment_seconds = config_int("min_segment_seconds", *v);
  }
  if (auto v = kv.take("excluded_weekdays")) cfg.excluded_weekdays = WeekdaySet::parse(*v);
  if (auto v = kv.take("max_gap_hours")) {
    cfg.max_gap_s = std::llround(config_double("max_gap_hours", *v) * kSecondsPerHour);
  }
  if (auto v = kv.take("sparse_tower_km")) cfg.sparse_tower_km = config_double("sparse_tower_km", *v);
  if (auto v = kv.take("sparse_dwell_share")) {
    cfg.sparse_dwell_share = config_double("sparse_dwell_share", *v);
  }
  cfg.validate();
  return cfg;
}

FilterConfig parse_filter_config(std::istream& in) {
  auto kv = KeyValues::parse(in);
  auto cfg = filter_config_from(kv);
  kv.reject_unconsumed("filter config");
  return cfg;
}

KeyValues to_key_values(const FilterConfig& cfg) {
  KeyValues kv;
  kv.set("resample_interval_minutes",
         csv::fixed(static_cast<double>(cfg.resample_interval_s) / kSecondsPerMinute, 3));
  kv.set("spatial_radius_km", csv::fixed(cfg.spatial_radius_km, 6));
  kv.set("speed_limit_kmh", csv::fixed(cfg.speed_limit_kmh, 6));
  kv.set("min_segment_seconds", std::to_string(cfg.min_segment_seconds));
  kv.set("excluded_weekdays", cfg.excluded_weekdays.to_string());
  kv.set("max_gap_hours", csv::fixed(static_cast<double>(cfg.max_gap_s) / kSecondsPerHour, 6));
  kv.set("sparse_tower_km", csv::fixed(cfg.sparse_tower_km, 6));
  kv.set("sparse_dwell_share", csv::fixed(cfg.sparse_dwell_share, 6));
  return kv;
}

std::span<const Sample> SampledTrack::segment(std::size_t i) const {
  const std::size_t begin = segment_starts.at(i);
  const std::size_t end = i + 1 < segment_starts.size() ? segment_starts[i + 1] : samples.size();
  return std::span<const Sample>(samples).subspan(begin, end - begin);
}

SampledTrack resample_uniform(const UserEvents& user, const FilterConfig& cfg) {
  SampledTrack track;
  track.user_id = user.user_id;
  const auto& events = user.events;
  const std::int64_t step = cfg.resample_interval_s;

  std::size_t begin = 0;
  while (begin < events.size()) {
    std::size_t end = begin + 1;
    while (end < events.size() &&
           lattice_floor(events[end].time, step) - lattice_ceil(events[end - 1].time, step) <
               cfg.max_gap_s) {
      ++end;
    }

    track.segment_starts.push_back(track.samples.size());
    const std::int64_t last_tick = lattice_ceil(events[end - 1].time, step);
    std::size_t current = begin;
    for (std::int64_t tick = lattice_floor(events[begin].time, step); tick <= last_tick; tick += step) {
      while (current + 1 < end && events[current + 1].time <= tick) ++current;
      track.samples.push_back(Sample{tick, events[current].location});
    }
    begin = end;
  }
  return track;
}

SampledTrack spatial_noise_filter(const SampledTrack& track, const TowerRegistry& registry,
                                  const FilterConfig& cfg) {
  SampledTrack out = track;
  std::optional<LocationId> anchor;
  LatLon anchor_position;
  for (auto& sample : out.samples) {
    if (!anchor) {
      anchor = sample.location;
      anchor_position = registry.position(sample.location);
      continue;
    }
    if (sample.location == *anchor) continue;
    const LatLon position = registry.position(sample.location);
    if (haversine_km(anchor_position, position) <= cfg.spatial_radius_km) {
      sample.location = *anchor;
    } else {
      anchor = sample.location;
      anchor_position = position;
    }
  }
  return out;
}

SpeedVerdict speed_screen(std::span<const GpsPoint> points, const FilterConfig& cfg) {
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const std::int64_t dt = points[i + 1].time - points[i].time;
    const double km = haversine_km(points[i].position, points[i + 1].position);
    if (dt <= 0) {
      if (km > 0.0) return {false, i, std::numeric_limits<double>::infinity()};
      continue;
    }
    if (dt < cfg.min_segment_seconds) continue;
    const double speed = km / (static_cast<double>(dt) / kSecondsPerHour);
    if (speed >= cfg.speed_limit_kmh) return {false, i, speed};
  }
  return {};
}

std::vector<CallEvent> calendar_filter(std::span<const CallEvent> events, const FilterConfig& cfg) {
  std::vector<CallEvent> out;
  out.reserve(events.size());
  std::copy_if(events.begin(), events.end(), std::back_inserter(out), [&](const CallEvent& e) {
    return !cfg.excluded_weekdays.contains(weekday_of(e.time));
  });
  return out;
}

std::vector<DwellInterval> gap_segmenter(std::span<const CallEvent> events, const FilterConfig& cfg) {
  std::vector<DwellInterval> out;
  for (std::size_t i = 0; i + 1 < events.size(); ++i) {
    const std::int64_t dt = events[i + 1].time - events[i].time;
    if (dt > 0 && dt < cfg.max_gap_s) {
      out.push_back(DwellInterval{events[i].location, events[i].time, events[i + 1].time});
    }
  }
  return out;
}

std::vector<DwellInterval> gap_segmenter(const SampledTrack& track, const FilterConfig& cfg) {
  std::vector<CallEvent> events;
  events.reserve(track.samples.size());
  for (const auto& s : track.samples) events.push_back(CallEvent{s.time, s.location});
  return gap_segmenter(events, cfg);
}

SparseTowers find_sparse_towers(const TowerRegistry& registry, const FilterConfig& cfg) {
  const std::size_t n = registry.size();
  SparseTowers result;
  result.sparse.assign(n, false);
  result.nearest_neighbor_km.assign(n, std::numeric_limits<double>::infinity());

  std::vector<std::size_t> by_lat(n);
  std::iota(by_lat.begin(), by_lat.end(), 0);
  std::vector<LatLon> pos(n);
  for (std::size_t i = 0; i < n; ++i) pos[i] = registry.position(static_cast<LocationId>(i));
  std::sort(by_lat.begin(), by_lat.end(),
            [&](std::size_t a, std::size_t b) { return pos[a].lat < pos[b].lat; });

  // Meridional separation bounds great-circle distance from below, so the scan
  // outward in latitude stops once it cannot improve.
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = by_lat[k];
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = k + 1; j < n; ++j) {
      if ((pos[by_lat[j]].lat - pos[i].lat) * kKmPerDegreeLat >= best) break;
      best = std::min(best, haversine_km(pos[i], pos[by_lat[j]]));
    }
    for (std::size_t j = k; j-- > 0;) {
      if ((pos[i].lat - pos[by_lat[j]].lat) * kKmPerDegreeLat >= best) break;
      best = std::min(best, haversine_km(pos[i], pos[by_lat[j]]));
    }
    result.nearest_neighbor_km[i] = best;
    if (best > cfg.sparse_tower_km) {
      result.sparse[i] = true;
      ++result.count;
    }
  }
  result.every_tower_sparse = n > 0 && result.count == n;
  return result;
}

bool passes_sparse_screen(std::span<const DwellInterval> intervals, const SparseTowers& towers,
                          const FilterConfig& cfg) {
  std::int64_t total = 0;
  std::int64_t sparse = 0;
  for (const auto& iv : intervals) {
    total += iv.duration();
    if (towers.is_sparse(iv.location)) sparse += iv.duration();
  }
  if (total == 0) return true;
  return static_cast<double>(sparse) <= cfg.sparse_dwell_share * static_cast<double>(total);
}

SparseScreenResult sparse_tower_screen(std::span<const std::vector<DwellInterval>> users,
                                       const TowerRegistry& registry, const FilterConfig& cfg) {
  SparseScreenResult result;
  result.towers = find_sparse_towers(registry, cfg);
  result.keep.reserve(users.size());
  for (const auto& intervals : users) {
    result.keep.push_back(passes_sparse_screen(intervals, result.towers, cfg));
  }
  return result;
}

}  // namespace commute
