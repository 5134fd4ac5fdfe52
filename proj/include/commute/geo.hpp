#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "commute/time.hpp"

namespace commute {

// Mean Earth radius (IUGG).
inline constexpr double kEarthRadiusKm = 6371.0088;

struct LatLon {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

bool valid_coordinate(LatLon p);

// Index into a TowerRegistry. Downstream modules carry these instead of the
// opaque string ids.
enum class LocationId : std::uint32_t {};

class TowerRegistry {
 public:
  // Throws DataError on a duplicate id or an invalid coordinate.
  LocationId add(std::string id, LatLon position);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  bool contains(LocationId loc) const { return static_cast<std::size_t>(loc) < ids_.size(); }

  std::optional<LocationId> find(std::string_view id) const;
  // Throws DataError when loc is not in the registry.
  const std::string& id(LocationId loc) const;
  LatLon position(LocationId loc) const;

  // Orders locations by their string id, the deterministic tie-break used by
  // every ranking in the pipeline.
  bool id_less(LocationId a, LocationId b) const { return id(a) < id(b); }

 private:
  std::vector<std::string> ids_;
  std::vector<LatLon> positions_;
  std::unordered_map<std::string, LocationId> index_;
};

struct CallEvent {
  LocalTime time = 0;
  LocationId location{};

  friend bool operator==(const CallEvent&, const CallEvent&) = default;
};

// One user's events, ascending by time (ties in input order).
struct UserEvents {
  std::string user_id;
  std::vector<CallEvent> events;
};

struct GpsPoint {
  LocalTime time = 0;
  LatLon position;
};

struct VehicleTrack {
  std::string vehicle_id;
  std::vector<GpsPoint> points;
};

// Row accounting for a parsed stream. Parse failures are counted, never fatal.
// Merging reports is associative and commutative.
struct ParseReport {
  std::size_t rows = 0;
  std::size_t accepted = 0;
  std::size_t malformed = 0;       // wrong field count or empty fields
  std::size_t bad_timestamp = 0;
  std::size_t unknown_tower = 0;
  std::size_t out_of_bounds = 0;

  ParseReport& operator+=(const ParseReport& other);
  std::size_t dropped() const { return rows - accepted; }
  friend bool operator==(const ParseReport&, const ParseReport&) = default;
};

struct CdrData {
  std::vector<UserEvents> users;  // ascending by user_id
  ParseReport report;
};

struct GpsData {
  std::vector<VehicleTrack> vehicles;  // ascending by vehicle_id
  ParseReport report;
};

// CSV with header `tower_id,lat,lon`. Throws DataError naming the offending
// line or id; an input without rows is rejected as an empty registry.
TowerRegistry load_tower_registry(std::istream& source);

// CSV with header `user_id,timestamp,tower_id`. The timestamp format (ISO-8601
// local or integer epoch seconds) is detected from the first data row and
// must be uniform within the file.
CdrData parse_cdr_stream(std::istream& source, const TowerRegistry& registry);

// CSV with header `vehicle_id,timestamp,lat,lon`.
GpsData parse_gps_stream(std::istream& source);

double haversine_km(LatLon a, LatLon b);

// Local equirectangular projection about an anchor; x east, y north, km.
class LocalProjection {
 public:
  explicit LocalProjection(LatLon anchor);

  struct Point {
    double east_km = 0.0;
    double north_km = 0.0;
  };

  Point forward(LatLon p) const;
  LatLon inverse(Point xy) const;
  LatLon anchor() const { return anchor_; }

 private:
  LatLon anchor_;
  double cos_lat_;
};

struct GridSpec {
  LatLon anchor;
  double cell_km = 0.5;
};

struct GridCell {
  std::int64_t row = 0;
  std::int64_t col = 0;

  friend bool operator==(const GridCell&, const GridCell&) = default;
  friend auto operator<=>(const GridCell&, const GridCell&) = default;
};

// Points farther than this from the grid anchor are rejected; the local
// projection is not meaningful beyond it.
inline constexpr double kGridValidityKm = 5000.0;

// Throws DataError for a point out of range of the anchor.
GridCell gps_to_grid(LatLon p, const GridSpec& spec);
LatLon grid_cell_center(GridCell cell, const GridSpec& spec);
std::string grid_cell_id(GridCell cell);

}  // namespace commute
