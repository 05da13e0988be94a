#pragma once

#include <stdexcept>
#include <string>

namespace vresport {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input series disagree in shape (length, universe).
struct DatasetError : Error {
  using Error::Error;
};

// A value is outside its admissible range.
struct ValidationError : Error {
  using Error::Error;
};

// The hourly timestamp sequence has a hole or goes backwards.
struct GapError : Error {
  using Error::Error;
};

struct DegenerateSeriesError : Error {
  using Error::Error;
};

struct DegeneratePlantError : Error {
  using Error::Error;
};

struct DegeneratePortfolioError : Error {
  using Error::Error;
};

struct InfeasibleRiskError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace vresport
