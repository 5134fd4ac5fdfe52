#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "commute/geo.hpp"
#include "commute/time.hpp"

namespace testing {

using commute::LatLon;
using commute::LocalTime;
using commute::LocationId;

// 2024-01-01 is a Monday.
inline constexpr std::int64_t kMonday = 19723;

inline LocalTime at(std::int64_t day, int hh, int mm = 0, int ss = 0) {
  return commute::day_start(day) + hh * 3600 + mm * 60 + ss;
}

inline LocalTime iso(const std::string& text) { return *commute::parse_iso_local(text); }

// Point `km` kilometres due north / east of `p`, along the sphere.
inline LatLon north_of(LatLon p, double km) {
  return {p.lat + km / (commute::kEarthRadiusKm * 3.14159265358979323846 / 180.0), p.lon};
}
inline LatLon east_of(LatLon p, double km) {
  const double per_deg = commute::kEarthRadiusKm * 3.14159265358979323846 / 180.0 *
                         std::cos(p.lat * 3.14159265358979323846 / 180.0);
  return {p.lat, p.lon + km / per_deg};
}

inline LatLon random_coordinate(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> z(-1.0, 1.0), lon(-180.0, 180.0);
  // uniform on the sphere
  return {std::asin(z(rng)) * 180.0 / 3.14159265358979323846, lon(rng)};
}

}  // namespace testing
