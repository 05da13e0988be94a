#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vresport/errors.hpp"

namespace vresport {

enum class Technology { wind, pv };

inline std::string_view to_string(Technology t) { return t == Technology::wind ? "wind" : "pv"; }

inline Technology parse_technology(std::string_view text) {
  if (text == "wind") return Technology::wind;
  if (text == "pv" || text == "PV") return Technology::pv;
  throw ValidationError("unknown technology '" + std::string(text) + "' (expected wind or pv)");
}

struct GeoPoint {
  double latitude = 0.0;   // degrees, [-90, 90]
  double longitude = 0.0;  // degrees, [-180, 180]
};

/// One candidate plant. `output` is per unit of installed capacity.
struct PlantSeries {
  std::string id;
  Technology technology = Technology::wind;
  GeoPoint location;
  std::vector<double> output;
  double invest_cost = 0.0;  // currency per kW
  double om_cost = 0.0;      // currency per kW and year
};

using PlantSet = std::vector<PlantSeries>;

/// Detrended demand in per unit of the local maximum, plus the MW anchor.
struct DemandSeries {
  std::vector<double> values;
  double peak = 1.0;  // MW
};

/// Demand recast as a generator with negative output and fixed capacity.
struct DemandGen {
  std::vector<double> output;  // -demand, per unit
  double capacity = 1.0;       // MW (peak load)
  double capacity_factor = 0;  // mean(output), in [-1, 0)
};

}  // namespace vresport
