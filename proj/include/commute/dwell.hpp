#pragma once

#include "commute/geo.hpp"
#include "commute/time.hpp"

namespace commute {

// A contiguous stay at one location over [start, end).
struct DwellInterval {
  LocationId location{};
  LocalTime start = 0;
  LocalTime end = 0;

  std::int64_t duration() const { return end - start; }
  friend bool operator==(const DwellInterval&, const DwellInterval&) = default;
};

}  // namespace commute
