#pragma once

#include <stdexcept>
#include <string>

namespace commute {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration: unknown keys, out-of-range thresholds, missing paths.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data that cannot be analyzed: malformed registries, empty inputs,
// samples too small for a statistic.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace commute
