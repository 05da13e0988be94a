#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "vresport/csv.hpp"
#include "vresport/errors.hpp"
#include "vresport/statistics.hpp"
#include "vresport/types.hpp"

namespace vresport {

/// Plants, optional demand and the shared hourly calendar, all of equal length.
struct Dataset {
  PlantSet plants;
  std::optional<DemandSeries> demand;
  std::vector<double> raw_demand_mw;  // as read, before detrending
  std::vector<HourStamp> timestamps;

  std::size_t length() const { return timestamps.size(); }
};

/// Divides each hourly value by the maximum of the centered window of
/// +-window_days days around it (clipped at the series ends).
inline DemandSeries detrend_demand(std::span<const double> raw, int window_days) {
  if (window_days < 1) throw ValidationError("detrend_demand: window_days must be >= 1");
  if (raw.empty()) throw ValidationError("detrend_demand: empty demand series");
  for (std::size_t t = 0; t < raw.size(); ++t) {
    if (!(raw[t] > 0.0)) {
      throw ValidationError("detrend_demand: non-positive demand " + std::to_string(raw[t]) + " at step " +
                            std::to_string(t));
    }
  }
  const std::size_t n = raw.size();
  const std::size_t half = static_cast<std::size_t>(window_days) * 24;
  DemandSeries out;
  out.values.resize(n);
  out.peak = *std::max_element(raw.begin(), raw.end());

  // Monotone deque of indices with decreasing values; front is the window max.
  std::deque<std::size_t> window;
  std::size_t next = 0;  // next index to push
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t hi = std::min(n - 1, t + half);
    for (; next <= hi; ++next) {
      while (!window.empty() && raw[window.back()] <= raw[next]) window.pop_back();
      window.push_back(next);
    }
    const std::size_t lo = t >= half ? t - half : 0;
    while (window.front() < lo) window.pop_front();
    out.values[t] = raw[t] / raw[window.front()];
  }
  return out;
}

/// Removes one plant of every pair whose Pearson correlation exceeds
/// `threshold`, re-scanning after each removal. Pairs are visited by
/// descending correlation (ties by id pair); within a pair the plant with the
/// higher mean output survives, ties kept by the lexicographically smaller id.
inline PlantSet prune_correlated(const PlantSet& plants, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ValidationError("prune_correlated: threshold must be in (0, 1]");
  const std::size_t n = plants.size();
  if (n <= 1) return plants;

  std::vector<double> means(n);
  std::vector<std::span<const double>> cols;
  for (std::size_t i = 0; i < n; ++i) {
    means[i] = mean(plants[i].output);
    cols.emplace_back(plants[i].output);
  }
  const Eigen::MatrixXd cov = covariance_of(cols);
  auto corr = [&](std::size_t i, std::size_t j) -> std::optional<double> {
    const double d = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) *
                     cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
    if (!(d > 0.0)) return std::nullopt;
    return cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / std::sqrt(d);
  };

  struct Pair {
    double r;
    std::size_t a, b;
  };
  std::vector<Pair> over;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (auto r = corr(i, j); r && *r > threshold) over.push_back({*r, i, j});
    }
  }
  auto pair_key = [&](const Pair& p) {
    const auto& ia = plants[p.a].id;
    const auto& ib = plants[p.b].id;
    return ia < ib ? std::tie(ia, ib) : std::tie(ib, ia);
  };
  std::sort(over.begin(), over.end(), [&](const Pair& x, const Pair& y) {
    if (x.r != y.r) return x.r > y.r;
    return pair_key(x) < pair_key(y);
  });

  std::vector<bool> removed(n, false);
  // Removing a plant only deletes pairs, so one pass in sorted order equals
  // re-scanning the remaining pairs after every removal.
  for (const auto& p : over) {
    if (removed[p.a] || removed[p.b]) continue;
    const bool keep_a = means[p.a] != means[p.b] ? means[p.a] > means[p.b] : plants[p.a].id < plants[p.b].id;
    removed[keep_a ? p.b : p.a] = true;
  }
  PlantSet out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!removed[i]) out.push_back(plants[i]);
  }
  return out;
}

inline DemandGen build_demandgen(const DemandSeries& demand, double peak_mw) {
  DemandGen g;
  g.output.resize(demand.values.size());
  std::transform(demand.values.begin(), demand.values.end(), g.output.begin(), [](double v) { return -v; });
  g.capacity = peak_mw;
  g.capacity_factor = demand.values.empty() ? 0.0 : mean(g.output);
  return g;
}

inline DemandGen build_demandgen(const DemandSeries& demand) { return build_demandgen(demand, demand.peak); }

namespace ingest_detail {

inline std::vector<HourStamp> check_hourly(const CsvTable& table, const std::string& path) {
  std::vector<HourStamp> stamps;
  stamps.reserve(table.rows.size());
  std::int64_t prev = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const HourStamp s = parse_timestamp(table.rows[r][0]);
    const std::int64_t ord = s.ordinal();
    if (r > 0) {
      if (ord <= prev) throw DatasetError(path + ": timestamp " + s.to_string() + " is not strictly increasing");
      if (ord != prev + 1) {
        throw GapError(path + ": missing timestamp " + HourStamp::from_ordinal(prev + 1).to_string());
      }
    }
    prev = ord;
    stamps.push_back(s);
  }
  return stamps;
}

}  // namespace ingest_detail

/// Reads the plant metadata CSV, the wide per-unit output CSV and, when given,
/// the demand CSV. Demand is detrended with `detrend_window_days`; 0 divides
/// by the global maximum instead.
inline Dataset load_dataset(const std::string& plants_path, const std::string& outputs_path,
                            const std::optional<std::string>& demand_path, int detrend_window_days = 3) {
  const CsvTable meta = read_csv(plants_path);
  const std::vector<std::string> meta_header{"id", "technology", "lat", "lon", "invest_cost_per_kw",
                                             "om_cost_per_kw_year"};
  if (meta.header != meta_header) {
    throw DatasetError(plants_path + ": expected header id,technology,lat,lon,invest_cost_per_kw,om_cost_per_kw_year");
  }
  std::map<std::string, PlantSeries> by_id;
  for (const auto& row : meta.rows) {
    PlantSeries p;
    p.id = row[0];
    if (p.id.empty()) throw ValidationError(plants_path + ": empty plant id");
    p.technology = parse_technology(row[1]);
    p.location.latitude = parse_double(row[2], plants_path);
    p.location.longitude = parse_double(row[3], plants_path);
    if (p.location.latitude < -90 || p.location.latitude > 90 || p.location.longitude < -180 ||
        p.location.longitude > 180) {
      throw ValidationError(plants_path + ": coordinates out of range for plant " + p.id);
    }
    p.invest_cost = parse_double(row[4], plants_path);
    p.om_cost = parse_double(row[5], plants_path);
    if (p.invest_cost < 0 || p.om_cost < 0) throw ValidationError(plants_path + ": negative cost for plant " + p.id);
    if (!by_id.emplace(p.id, p).second) throw DatasetError(plants_path + ": duplicate plant id " + p.id);
  }

  const CsvTable outputs = read_csv(outputs_path);
  if (outputs.header.empty() || outputs.header[0] != "timestamp") {
    throw DatasetError(outputs_path + ": first column must be 'timestamp'");
  }
  Dataset ds;
  ds.timestamps = ingest_detail::check_hourly(outputs, outputs_path);
  for (std::size_t c = 1; c < outputs.header.size(); ++c) {
    const auto it = by_id.find(outputs.header[c]);
    if (it == by_id.end()) throw DatasetError(outputs_path + ": column " + outputs.header[c] + " has no metadata");
    PlantSeries p = it->second;
    p.output.reserve(outputs.rows.size());
    for (std::size_t r = 0; r < outputs.rows.size(); ++r) {
      const double v = parse_double(outputs.rows[r][c], outputs_path);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError(outputs_path + ": output " + outputs.rows[r][c] + " of plant " + p.id + " at " +
                              ds.timestamps[r].to_string() + " outside [0, 1]");
      }
      p.output.push_back(v);
    }
    ds.plants.push_back(std::move(p));
  }
  if (ds.plants.size() != by_id.size()) {
    throw DatasetError(plants_path + ": metadata lists plants missing from " + outputs_path);
  }

  if (demand_path) {
    const CsvTable dem = read_csv(*demand_path);
    if (dem.header != std::vector<std::string>{"timestamp", "demand_mw"}) {
      throw DatasetError(*demand_path + ": expected header timestamp,demand_mw");
    }
    const auto stamps = ingest_detail::check_hourly(dem, *demand_path);
    if (stamps.size() != ds.timestamps.size()) {
      throw DatasetError("demand has " + std::to_string(stamps.size()) + " steps, outputs have " +
                         std::to_string(ds.timestamps.size()));
    }
    if (!stamps.empty() && stamps.front() != ds.timestamps.front()) {
      throw DatasetError("demand and outputs start at different timestamps");
    }
    for (const auto& row : dem.rows) ds.raw_demand_mw.push_back(parse_double(row[1], *demand_path));
    if (detrend_window_days > 0) {
      ds.demand = detrend_demand(ds.raw_demand_mw, detrend_window_days);
    } else {
      DemandSeries d;
      d.peak = *std::max_element(ds.raw_demand_mw.begin(), ds.raw_demand_mw.end());
      if (!(d.peak > 0)) throw ValidationError("demand must be positive");
      for (double v : ds.raw_demand_mw) {
        if (!(v > 0.0)) throw ValidationError("demand must be positive");
        d.values.push_back(v / d.peak);
      }
      ds.demand = std::move(d);
    }
  }
  return ds;
}

}  // namespace vresport
