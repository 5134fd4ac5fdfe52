#include "commute/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "commute/csv.hpp"
#include "commute/error.hpp"

namespace commute {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

enum class TimestampFormat { Unknown, Iso, Epoch };

TimestampFormat detect_format(std::string_view field) {
  field = csv::trim(field);
  return field.find_first_of("-T:") != std::string_view::npos && field.size() > 12
             ? TimestampFormat::Iso
             : TimestampFormat::Epoch;
}

std::optional<LocalTime> parse_timestamp(std::string_view field, TimestampFormat format) {
  field = csv::trim(field);
  if (format == TimestampFormat::Iso) return parse_iso_local(field);
  return csv::parse_int(field);
}

}  // namespace

bool valid_coordinate(LatLon p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

LocationId TowerRegistry::add(std::string id, LatLon position) {
  if (!valid_coordinate(position)) {
    throw DataError("tower '" + id + "' has an invalid coordinate");
  }
  const auto loc = static_cast<LocationId>(ids_.size());
  auto [it, inserted] = index_.emplace(id, loc);
  if (!inserted) throw DataError("duplicate tower id '" + id + "'");
  ids_.push_back(std::move(id));
  positions_.push_back(position);
  return loc;
}

std::optional<LocationId> TowerRegistry::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& TowerRegistry::id(LocationId loc) const {
  if (!contains(loc)) {
    throw DataError("location index " + std::to_string(static_cast<std::uint32_t>(loc)) +
                    " is not in the registry");
  }
  return ids_[static_cast<std::size_t>(loc)];
}

LatLon TowerRegistry::position(LocationId loc) const {
  if (!contains(loc)) {
    throw DataError("location index " + std::to_string(static_cast<std::uint32_t>(loc)) +
                    " is not in the registry");
  }
  return positions_[static_cast<std::size_t>(loc)];
}

ParseReport& ParseReport::operator+=(const ParseReport& other) {
  rows += other.rows;
  accepted += other.accepted;
  malformed += other.malformed;
  bad_timestamp += other.bad_timestamp;
  unknown_tower += other.unknown_tower;
  out_of_bounds += other.out_of_bounds;
  return *this;
}

TowerRegistry load_tower_registry(std::istream& source) {
  csv::LineReader reader(source);
  std::string line;
  if (!reader.next(line)) throw DataError("empty registry");
  if (!csv::header_matches(line, "tower_id,lat,lon")) {
    throw DataError("tower registry line " + std::to_string(reader.line_number()) +
                    ": expected header 'tower_id,lat,lon'");
  }
  TowerRegistry registry;
  while (reader.next(line)) {
    const auto fields = csv::split(line);
    const auto where = "tower registry line " + std::to_string(reader.line_number());
    if (fields.size() != 3 || csv::trim(fields[0]).empty()) {
      throw DataError(where + ": expected 3 fields");
    }
    const auto lat = csv::parse_double(fields[1]);
    const auto lon = csv::parse_double(fields[2]);
    if (!lat || !lon || !valid_coordinate({*lat, *lon})) {
      throw DataError(where + ": malformed coordinate");
    }
    std::string id(csv::trim(fields[0]));
    if (registry.find(id)) throw DataError(where + ": duplicate tower id '" + id + "'");
    registry.add(std::move(id), {*lat, *lon});
  }
  if (registry.empty()) throw DataError("empty registry");
  return registry;
}

CdrData parse_cdr_stream(std::istream& source, const TowerRegistry& registry) {
  CdrData out;
  csv::LineReader reader(source);
  std::string line;
  if (!reader.next(line)) return out;
  if (!csv::header_matches(line, "user_id,timestamp,tower_id")) {
    throw DataError("CDR line " + std::to_string(reader.line_number()) +
                    ": expected header 'user_id,timestamp,tower_id'");
  }

  std::unordered_map<std::string, std::size_t> user_index;
  TimestampFormat format = TimestampFormat::Unknown;
  while (reader.next(line)) {
    ++out.report.rows;
    const auto fields = csv::split(line);
    if (fields.size() != 3 || csv::trim(fields[0]).empty() || csv::trim(fields[2]).empty()) {
      ++out.report.malformed;
      continue;
    }
    if (format == TimestampFormat::Unknown) format = detect_format(fields[1]);
    const auto time = parse_timestamp(fields[1], format);
    if (!time) {
      ++out.report.bad_timestamp;
      continue;
    }
    const auto tower = registry.find(csv::trim(fields[2]));
    if (!tower) {
      ++out.report.unknown_tower;
      continue;
    }
    std::string user(csv::trim(fields[0]));
    auto [it, inserted] = user_index.try_emplace(user, out.users.size());
    if (inserted) out.users.push_back(UserEvents{std::move(user), {}});
    out.users[it->second].events.push_back(CallEvent{*time, *tower});
    ++out.report.accepted;
  }

  std::sort(out.users.begin(), out.users.end(),
            [](const UserEvents& a, const UserEvents& b) { return a.user_id < b.user_id; });
  for (auto& u : out.users) {
    std::stable_sort(u.events.begin(), u.events.end(),
                     [](const CallEvent& a, const CallEvent& b) { return a.time < b.time; });
  }
  return out;
}

GpsData parse_gps_stream(std::istream& source) {
  GpsData out;
  csv::LineReader reader(source);
  std::string line;
  if (!reader.next(line)) return out;
  if (!csv::header_matches(line, "vehicle_id,timestamp,lat,lon")) {
    throw DataError("GPS line " + std::to_string(reader.line_number()) +
                    ": expected header 'vehicle_id,timestamp,lat,lon'");
  }

  std::unordered_map<std::string, std::size_t> vehicle_index;
  TimestampFormat format = TimestampFormat::Unknown;
  while (reader.next(line)) {
    ++out.report.rows;
    const auto fields = csv::split(line);
    if (fields.size() != 4 || csv::trim(fields[0]).empty()) {
      ++out.report.malformed;
      continue;
    }
    if (format == TimestampFormat::Unknown) format = detect_format(fields[1]);
    const auto time = parse_timestamp(fields[1], format);
    if (!time) {
      ++out.report.bad_timestamp;
      continue;
    }
    const auto lat = csv::parse_double(fields[2]);
    const auto lon = csv::parse_double(fields[3]);
    if (!lat || !lon) {
      ++out.report.malformed;
      continue;
    }
    if (!valid_coordinate({*lat, *lon})) {
      ++out.report.out_of_bounds;
      continue;
    }
    std::string vehicle(csv::trim(fields[0]));
    auto [it, inserted] = vehicle_index.try_emplace(vehicle, out.vehicles.size());
    if (inserted) out.vehicles.push_back(VehicleTrack{std::move(vehicle), {}});
    out.vehicles[it->second].points.push_back(GpsPoint{*time, {*lat, *lon}});
    ++out.report.accepted;
  }

  std::sort(out.vehicles.begin(), out.vehicles.end(),
            [](const VehicleTrack& a, const VehicleTrack& b) { return a.vehicle_id < b.vehicle_id; });
  for (auto& v : out.vehicles) {
    std::stable_sort(v.points.begin(), v.points.end(),
                     [](const GpsPoint& a, const GpsPoint& b) { return a.time < b.time; });
  }
  return out;
}

double haversine_km(LatLon a, LatLon b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = phi2 - phi1;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

LocalProjection::LocalProjection(LatLon anchor)
    : anchor_(anchor), cos_lat_(std::cos(anchor.lat * kDegToRad)) {}

LocalProjection::Point LocalProjection::forward(LatLon p) const {
  double dlon = p.lon - anchor_.lon;
  if (dlon > 180.0) dlon -= 360.0;
  if (dlon < -180.0) dlon += 360.0;
  return {kEarthRadiusKm * dlon * kDegToRad * cos_lat_,
          kEarthRadiusKm * (p.lat - anchor_.lat) * kDegToRad};
}

LatLon LocalProjection::inverse(Point xy) const {
  const double lat = anchor_.lat + xy.north_km / kEarthRadiusKm / kDegToRad;
  double lon = anchor_.lon + xy.east_km / (kEarthRadiusKm * cos_lat_) / kDegToRad;
  if (lon > 180.0) lon -= 360.0;
  if (lon < -180.0) lon += 360.0;
  return {lat, lon};
}

GridCell gps_to_grid(LatLon p, const GridSpec& spec) {
  if (!(spec.cell_km > 0.0)) throw DataError("grid cell size must be positive");
  if (!valid_coordinate(p) || haversine_km(p, spec.anchor) > kGridValidityKm) {
    throw DataError("point (" + csv::fixed(p.lat, 6) + ", " + csv::fixed(p.lon, 6) +
                    ") is out of range of the grid anchor");
  }
  const auto xy = LocalProjection(spec.anchor).forward(p);
  return {static_cast<std::int64_t>(std::floor(xy.north_km / spec.cell_km)),
          static_cast<std::int64_t>(std::floor(xy.east_km / spec.cell_km))};
}

LatLon grid_cell_center(GridCell cell, const GridSpec& spec) {
  return LocalProjection(spec.anchor)
      .inverse({(static_cast<double>(cell.col) + 0.5) * spec.cell_km,
                (static_cast<double>(cell.row) + 0.5) * spec.cell_km});
}

std::string grid_cell_id(GridCell cell) {
  return "r" + std::to_string(cell.row) + "c" + std::to_string(cell.col);
}

}  // namespace commute
