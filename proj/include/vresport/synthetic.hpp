#pragma once

// Deterministic synthetic wind / PV / demand series for tests and fixtures.
// Shapes are crude but keep the features the models react to: diurnal PV,
// seasonal swing, regionally correlated wind, a demand profile with a daily
// cycle and slow growth.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "vresport/csv.hpp"
#include "vresport/errors.hpp"
#include "vresport/types.hpp"

namespace vresport {

struct SyntheticSpec {
  std::size_t n_wind = 3;
  std::size_t n_pv = 2;
  std::size_t hours = 8760;
  int start_year = 2019;
  std::uint64_t seed = 1;
  double demand_mean_mw = 1000.0;
  double demand_growth_per_year = 0.03;
};

struct SyntheticData {
  PlantSet plants;
  std::vector<HourStamp> calendar;
  std::vector<double> demand_mw;
};

inline SyntheticData make_synthetic(const SyntheticSpec& spec) {
  if (spec.hours == 0) throw ValidationError("synthetic: hours must be > 0");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  constexpr double two_pi = 2.0 * std::numbers::pi;

  SyntheticData out;
  const HourStamp first{spec.start_year, 1, 1, 0};
  const std::int64_t t0 = first.ordinal();
  for (std::size_t t = 0; t < spec.hours; ++t) out.calendar.push_back(HourStamp::from_ordinal(t0 + static_cast<std::int64_t>(t)));
  auto day_of_year = [&](std::size_t t) { return static_cast<double>(t / 24 % 365); };

  // Two weather regions; each wind plant mixes its region's factor with a local one.
  const std::size_t n_regions = 2;
  std::vector<std::vector<double>> region(n_regions, std::vector<double>(spec.hours));
  for (auto& r : region) {
    double s = normal(rng);
    for (std::size_t t = 0; t < spec.hours; ++t) {
      s = 0.97 * s + std::sqrt(1 - 0.97 * 0.97) * normal(rng);
      r[t] = s;
    }
  }

  auto place = [&](std::size_t reg) {
    GeoPoint g;
    g.latitude = (reg == 0 ? -8.0 : -22.0) + 4.0 * (uniform(rng) - 0.5);
    g.longitude = (reg == 0 ? -38.0 : -48.0) + 6.0 * (uniform(rng) - 0.5);
    return g;
  };

  for (std::size_t w = 0; w < spec.n_wind; ++w) {
    PlantSeries p;
    p.id = "W" + std::to_string(w + 1);
    p.technology = Technology::wind;
    const std::size_t reg = w % n_regions;
    p.location = place(reg);
    p.invest_cost = 4800.0;
    p.om_cost = 90.0;
    const double mix = 0.5 + 0.4 * uniform(rng);
    const double base = -0.6 + 0.8 * uniform(rng);
    const double spread = 0.8 + 0.6 * uniform(rng);
    const double diurnal_phase = two_pi * uniform(rng);
    const double season_phase = two_pi * uniform(rng);
    double local = normal(rng);
    p.output.resize(spec.hours);
    for (std::size_t t = 0; t < spec.hours; ++t) {
      local = 0.9 * local + std::sqrt(1 - 0.81) * normal(rng);
      const double hour = static_cast<double>(t % 24);
      const double z = base + spread * (mix * region[reg][t] + std::sqrt(1 - mix * mix) * local) +
                       0.3 * std::sin(two_pi * hour / 24.0 + diurnal_phase) +
                       0.4 * std::sin(two_pi * day_of_year(t) / 365.0 + season_phase);
      p.output[t] = std::clamp(1.0 / (1.0 + std::exp(-2.0 * z)) * 1.05 - 0.03, 0.0, 1.0);
    }
    out.plants.push_back(std::move(p));
  }

  for (std::size_t s = 0; s < spec.n_pv; ++s) {
    PlantSeries p;
    p.id = "S" + std::to_string(s + 1);
    p.technology = Technology::pv;
    const std::size_t reg = s % n_regions;
    p.location = place(reg);
    p.invest_cost = 3500.0;
    p.om_cost = 50.0;
    const double peak = 0.75 + 0.2 * uniform(rng);
    const double shift = 1.5 * (uniform(rng) - 0.5);  // hours, longitude effect
    double cloud = 0.0;
    p.output.resize(spec.hours);
    for (std::size_t t = 0; t < spec.hours; ++t) {
      if (t % 24 == 0) cloud = 0.6 * cloud + 0.8 * normal(rng) - 0.2 * region[reg][t];
      const double hour = static_cast<double>(t % 24) + 0.5 - shift;
      const double season = 1.0 + 0.15 * std::cos(two_pi * (day_of_year(t) - 172.0) / 365.0);
      const double elev = std::sin(std::numbers::pi * (hour - 6.0) / 12.0);
      const double clear = hour > 6.0 && hour < 18.0 ? std::pow(std::max(elev, 0.0), 1.3) : 0.0;
      const double sky = std::clamp(1.0 - 0.35 * std::max(cloud, 0.0), 0.15, 1.0);
      p.output[t] = std::clamp(peak * season * clear * sky, 0.0, 1.0);
    }
    out.plants.push_back(std::move(p));
  }

  out.demand_mw.resize(spec.hours);
  double noise = 0.0;
  for (std::size_t t = 0; t < spec.hours; ++t) {
    noise = 0.8 * noise + 0.02 * normal(rng);
    const double hour = static_cast<double>(t % 24);
    const double years = static_cast<double>(t) / 8760.0;
    const double dow = static_cast<double>(t / 24 % 7);
    const double daily = 0.12 * std::sin(two_pi * (hour - 9.0) / 24.0) + 0.05 * std::sin(two_pi * (hour - 15.0) / 12.0);
    const double weekly = dow >= 5 ? -0.08 : 0.0;
    const double season = 0.06 * std::cos(two_pi * (day_of_year(t) - 30.0) / 365.0);
    out.demand_mw[t] = spec.demand_mean_mw * (1.0 + spec.demand_growth_per_year * years) *
                       std::max(0.3, 1.0 + daily + weekly + season + noise);
  }
  return out;
}

/// Writes plants.csv, outputs.csv and demand.csv into `dir`.
inline void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "plants.csv");
    f << "id,technology,lat,lon,invest_cost_per_kw,om_cost_per_kw_year\n";
    for (const auto& p : data.plants) {
      f << p.id << ',' << to_string(p.technology) << ',' << format_double(std::round(p.location.latitude * 1e4) / 1e4)
        << ',' << format_double(std::round(p.location.longitude * 1e4) / 1e4) << ',' << format_double(p.invest_cost)
        << ',' << format_double(p.om_cost) << '\n';
    }
  }
  {
    std::ofstream f(dir / "outputs.csv");
    f << "timestamp";
    for (const auto& p : data.plants) f << ',' << p.id;
    f << '\n';
    char buf[32];
    for (std::size_t t = 0; t < data.calendar.size(); ++t) {
      f << data.calendar[t].to_string();
      for (const auto& p : data.plants) {
        std::snprintf(buf, sizeof(buf), ",%.5f", p.output[t]);
        f << buf;
      }
      f << '\n';
    }
  }
  if (!data.demand_mw.empty()) {
    std::ofstream f(dir / "demand.csv");
    f << "timestamp,demand_mw\n";
    char buf[32];
    for (std::size_t t = 0; t < data.calendar.size(); ++t) {
      std::snprintf(buf, sizeof(buf), ",%.3f", data.demand_mw[t]);
      f << data.calendar[t].to_string() << buf << '\n';
    }
  }
}

}  // namespace vresport
