#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vresport/errors.hpp"
#include "vresport/types.hpp"

namespace vresport {

inline constexpr double kEarthRadiusKm = 6371.0;

/// Symmetric covariance matrix with the plant ids it refers to. When a
/// DemandGen is included it is the last row/column, labelled "DemandGen".
struct CovMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd values;
};

inline double capacity_factor(std::span<const double> series) {
  if (series.empty()) throw ValidationError("capacity factor of an empty series");
  double sum = 0.0;
  for (double v : series) sum += v;
  return sum / static_cast<double>(series.size());
}

inline double mean(std::span<const double> series) { return capacity_factor(series); }

/// Pearson correlation. Two-pass (centered) accumulation.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DatasetError("pearson: series lengths differ");
  if (a.empty()) throw DegenerateSeriesError("pearson: empty series");
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double da = a[t] - ma;
    const double db = b[t] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) throw DegenerateSeriesError("pearson: zero-variance series");
  const double r = sab / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

enum class CovarianceKind { population, sample };

/// Covariance of the columns of a series list (each entry one variable).
inline Eigen::MatrixXd covariance_of(const std::vector<std::span<const double>>& columns,
                                     CovarianceKind kind = CovarianceKind::population) {
  const auto n = static_cast<Eigen::Index>(columns.size());
  if (n == 0) return Eigen::MatrixXd(0, 0);
  const auto len = columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != len) throw DatasetError("covariance: series lengths differ");
  }
  if (len == 0) throw ValidationError("covariance: empty series");
  const auto t = static_cast<Eigen::Index>(len);
  Eigen::MatrixXd centered(t, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto col = columns[static_cast<std::size_t>(j)];
    const double m = mean(col);
    for (Eigen::Index i = 0; i < t; ++i) centered(i, j) = col[static_cast<std::size_t>(i)] - m;
  }
  const double denom = kind == CovarianceKind::population ? static_cast<double>(t)
                                                           : static_cast<double>(std::max<Eigen::Index>(t - 1, 1));
  Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
  // exact symmetry
  cov = 0.5 * (cov + cov.transpose()).eval();
  return cov;
}

inline CovMatrix covariance_matrix(const PlantSet& plants, const DemandGen* demandgen = nullptr,
                                   CovarianceKind kind = CovarianceKind::population) {
  CovMatrix out;
  std::vector<std::span<const double>> columns;
  for (const auto& p : plants) {
    out.labels.push_back(p.id);
    columns.emplace_back(p.output);
  }
  if (demandgen != nullptr) {
    out.labels.emplace_back("DemandGen");
    columns.emplace_back(demandgen->output);
  }
  out.values = covariance_of(columns, kind);
  return out;
}

inline CovMatrix covariance_matrix(const PlantSet& plants, const std::optional<DemandGen>& demandgen,
                                   CovarianceKind kind = CovarianceKind::population) {
  return covariance_matrix(plants, demandgen ? &*demandgen : nullptr, kind);
}

/// Haversine great-circle distance on a sphere of radius 6371 km.
inline double geo_distance(GeoPoint p, GeoPoint q) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double phi1 = p.latitude * deg;
  const double phi2 = q.latitude * deg;
  const double dphi = (q.latitude - p.latitude) * deg;
  const double dlambda = (q.longitude - p.longitude) * deg;
  const double s1 = std::sin(dphi / 2);
  const double s2 = std::sin(dlambda / 2);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

/// Pairwise dump `id_a,id_b,pearson,km` for i < j. Constant series get "nan".
inline void write_correlation_csv(std::ostream& out, const PlantSet& plants) {
  out << "id_a,id_b,pearson,km\n";
  for (std::size_t i = 0; i < plants.size(); ++i) {
    for (std::size_t j = i + 1; j < plants.size(); ++j) {
      std::string r = "nan";
      try {
        r = std::to_string(pearson(plants[i].output, plants[j].output));
      } catch (const DegenerateSeriesError&) {
      }
      out << plants[i].id << ',' << plants[j].id << ',' << r << ','
          << std::to_string(geo_distance(plants[i].location, plants[j].location)) << '\n';
    }
  }
}

/// Smallest eigenvalue check used for covariance sanity: min eig >= -rel * max eig.
inline bool is_psd(const Eigen::MatrixXd& m, double rel = 1e-8) {
  if (m.rows() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double top = std::max(ev.maxCoeff(), 0.0);
  return ev.minCoeff() >= -rel * std::max(top, 1e-300);
}

}  // namespace vresport
