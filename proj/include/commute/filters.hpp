#pragma once

#include <bitset>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "commute/config.hpp"
#include "commute/dwell.hpp"
#include "commute/geo.hpp"

namespace commute {

class WeekdaySet {
 public:
  WeekdaySet() = default;
  WeekdaySet(std::initializer_list<Weekday> days) {
    for (auto d : days) insert(d);
  }

  void insert(Weekday d) { bits_.set(static_cast<std::size_t>(d)); }
  bool contains(Weekday d) const { return bits_.test(static_cast<std::size_t>(d)); }
  std::size_t size() const { return bits_.count(); }
  bool empty() const { return bits_.none(); }

  // Comma-separated names (full or three-letter); empty text is the empty set.
  static WeekdaySet parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const WeekdaySet&, const WeekdaySet&) = default;

 private:
  std::bitset<7> bits_;
};

struct FilterConfig {
  std::int64_t resample_interval_s = 10 * kSecondsPerMinute;
  double spatial_radius_km = 1.0;
  double speed_limit_kmh = 120.0;
  std::int64_t min_segment_seconds = 60;
  WeekdaySet excluded_weekdays{Weekday::Saturday, Weekday::Sunday};
  std::int64_t max_gap_s = 16 * kSecondsPerHour;
  double sparse_tower_km = 50.0;
  double sparse_dwell_share = 0.10;

  // Throws ConfigError when a magnitude is not strictly positive, more than
  // six weekdays are excluded, or the share is outside (0, 1).
  void validate() const;
};

// Consumes the filter keys present in `kv`, leaving others for the caller.
FilterConfig filter_config_from(KeyValues& kv);
// Standalone file form; unknown keys are rejected.
FilterConfig parse_filter_config(std::istream& in);
KeyValues to_key_values(const FilterConfig& cfg);

struct Sample {
  LocalTime time = 0;
  LocationId location{};

  friend bool operator==(const Sample&, const Sample&) = default;
};

// Samples on a uniform lattice, split into segments. Within a segment
// consecutive samples are exactly one resample interval apart.
struct SampledTrack {
  std::string user_id;
  std::vector<Sample> samples;
  std::vector<std::size_t> segment_starts;

  std::size_t segment_count() const { return segment_starts.size(); }
  std::span<const Sample> segment(std::size_t i) const;

  friend bool operator==(const SampledTrack&, const SampledTrack&) = default;
};

// Lattice ticks are multiples of the interval. Each segment covers
// [floor(first event), ceil(last event)] and every tick carries the location
// of the most recent event at or before it (the first tick, rounded down,
// carries the first event). A new segment starts when the lattice gap between
// ceil(previous event) and floor(next event) reaches max_gap, so no tick is
// ever fabricated max_gap or more after the event it repeats.
SampledTrack resample_uniform(const UserEvents& user, const FilterConfig& cfg);

// Sticky-anchor suppression of tower ping-pong: a held anchor absorbs every
// sample within spatial_radius of it; a sample farther away becomes the new
// anchor. The anchor persists across segments.
SampledTrack spatial_noise_filter(const SampledTrack& track, const TowerRegistry& registry,
                                  const FilterConfig& cfg);

struct SpeedVerdict {
  bool keep = true;
  // Index i of the offending pair (i, i + 1) when discarded.
  std::optional<std::size_t> offending_pair;
  double speed_kmh = 0.0;  // of the offending pair; infinity for duplicate timestamps
};

// Consecutive pairs closer in time than min_segment_seconds are ignored.
// Duplicate timestamps at distinct positions always discard.
SpeedVerdict speed_screen(std::span<const GpsPoint> points, const FilterConfig& cfg);

std::vector<CallEvent> calendar_filter(std::span<const CallEvent> events, const FilterConfig& cfg);

// Interval [t_i, t_{i+1}) at event i's location for every consecutive pair
// closer than max_gap.
std::vector<DwellInterval> gap_segmenter(std::span<const CallEvent> events, const FilterConfig& cfg);
std::vector<DwellInterval> gap_segmenter(const SampledTrack& track, const FilterConfig& cfg);

struct SparseTowers {
  std::vector<bool> sparse;                // indexed by LocationId
  std::vector<double> nearest_neighbor_km; // infinity for a single-tower registry
  std::size_t count = 0;
  bool every_tower_sparse = false;         // pathological registry

  bool is_sparse(LocationId loc) const { return sparse[static_cast<std::size_t>(loc)]; }
};

SparseTowers find_sparse_towers(const TowerRegistry& registry, const FilterConfig& cfg);

struct SparseScreenResult {
  std::vector<bool> keep;  // parallel to the input users
  SparseTowers towers;
};

// Removes users whose dwell share at sparse towers exceeds sparse_dwell_share.
SparseScreenResult sparse_tower_screen(std::span<const std::vector<DwellInterval>> users,
                                       const TowerRegistry& registry, const FilterConfig& cfg);
bool passes_sparse_screen(std::span<const DwellInterval> intervals, const SparseTowers& towers,
                          const FilterConfig& cfg);

}  // namespace commute
