#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "vresport/csv.hpp"
#include "vresport/errors.hpp"
#include "vresport/models.hpp"
#include "vresport/statistics.hpp"
#include "vresport/types.hpp"

namespace vresport {

/// Shares below this are treated as solver noise in the diversity sums.
inline constexpr double kShareFloor = 1e-6;

inline double cv_ratio(double sd, double cf) {
  if (!(cf > 0.0)) throw DegeneratePortfolioError("cv: capacity factor must be > 0");
  return sd / cf;
}

/// SD per installed capacity over capacity factor (= SD / mean output).
inline double cv_ratio(const FrontierPoint& p) { return cv_ratio(p.achieved_sd_per_cap, p.cf); }

inline double sharpe(const FrontierPoint& p) {
  if (!(p.cf > 0.0)) throw DegeneratePortfolioError("sharpe: capacity factor must be > 0");
  return p.achieved_sd_per_cap > 0.0 ? p.cf / p.achieved_sd_per_cap : std::numeric_limits<double>::infinity();
}

/// Index of the lowest-CV optimal point; ties go to the lower index.
inline std::optional<std::size_t> min_cv_index(const Frontier& fr) {
  std::optional<std::size_t> best;
  double best_cv = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < fr.points.size(); ++i) {
    const auto& p = fr.points[i];
    if (!p.ok() || !(p.cf > 0.0)) continue;
    const double cv = cv_ratio(p);
    if (cv < best_cv) {
      best_cv = cv;
      best = i;
    }
  }
  return best;
}

struct DiversityReport {
  double gd = 0.0;  // km
  double ed = 0.0;
  double hhi = 1.0;
  double inv_hhi = 1.0;
};

/// Generation shares P_i mu_i / sum; entries under kShareFloor are zeroed and
/// the rest renormalized.
inline Eigen::VectorXd generation_shares(const Eigen::VectorXd& capacities, const PlantSet& plants) {
  if (capacities.size() != static_cast<Eigen::Index>(plants.size())) {
    throw DatasetError("capacities and plants differ in length");
  }
  Eigen::VectorXd g(capacities.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    g[i] = std::max(0.0, capacities[i]) * capacity_factor(plants[static_cast<std::size_t>(i)].output);
  }
  const double total = g.sum();
  if (!(total > 0.0)) throw DegeneratePortfolioError("portfolio has no generation");
  g /= total;
  for (auto& w : g) {
    if (w < kShareFloor) w = 0.0;
  }
  return g / g.sum();
}

/// Root of the summed squared hourly differences between two series.
inline double profile_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DatasetError("profile distance: series differ in length");
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) s += (a[t] - b[t]) * (a[t] - b[t]);
  return std::sqrt(s);
}

inline DiversityReport diversity(const Eigen::VectorXd& capacities, const PlantSet& plants) {
  const Eigen::VectorXd w = generation_shares(capacities, plants);
  DiversityReport r;
  r.hhi = w.squaredNorm();
  r.inv_hhi = 1.0 / r.hhi;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    for (Eigen::Index j = i + 1; j < w.size(); ++j) {
      if (w[j] == 0.0) continue;
      const auto& a = plants[static_cast<std::size_t>(i)];
      const auto& b = plants[static_cast<std::size_t>(j)];
      // both (i, j) and (j, i) terms of the double sum
      r.gd += 2.0 * w[i] * w[j] * geo_distance(a.location, b.location);
      r.ed += 2.0 * w[i] * w[j] * profile_distance(a.output, b.output);
    }
  }
  return r;
}

inline DiversityReport diversity(const FrontierPoint& p, const PlantSet& plants) {
  return diversity(p.capacities, plants);
}

/// Hourly generation in MW of a portfolio given capacities in MW.
inline std::vector<double> portfolio_output(const Eigen::VectorXd& capacities, const PlantSet& plants) {
  if (plants.empty()) throw DegeneratePortfolioError("no plants");
  std::vector<double> g(plants.front().output.size(), 0.0);
  for (std::size_t i = 0; i < plants.size(); ++i) {
    const double c = capacities[static_cast<Eigen::Index>(i)];
    if (c == 0.0) continue;
    const auto& y = plants[i].output;
    if (y.size() != g.size()) throw DatasetError("plant " + plants[i].id + " has a different series length");
    for (std::size_t t = 0; t < g.size(); ++t) g[t] += c * y[t];
  }
  return g;
}

struct RiskReport {
  double scale_factor = 1.0;
  double installed_after = 0.0;      // MW
  double cost_per_demand_mwh = 0.0;  // currency per MWh of demand
  double var_q = 0.0;                // MW
  double cvar_q = 0.0;               // MW
  double mean_excess_fraction = 0.0;  // of mean demand
};

/// Scales every capacity by one factor s, the lowest for which the lower-tail
/// mean of s*G_t - L_t reaches omega over the full series. `lcoe` (currency/MWh
/// per plant) prices the scaled portfolio against total demand.
inline RiskReport normalize_to_risk(const Eigen::VectorXd& capacities, const PlantSet& plants,
                                    std::span<const double> load_mw, const Eigen::VectorXd& lcoe_per_mwh, double q,
                                    double omega) {
  const std::vector<double> gen = portfolio_output(capacities, plants);
  if (gen.size() != load_mw.size()) throw DatasetError("load and generation differ in length");
  const double mean_load = mean(load_mw);
  const double mean_gen = mean(gen);
  if (!(mean_gen > 0.0)) throw DegeneratePortfolioError("portfolio has no generation");

  std::vector<double> bal(gen.size());
  auto cvar_at = [&](double s) {
    for (std::size_t t = 0; t < bal.size(); ++t) bal[t] = s * gen[t] - load_mw[t];
    return cvar_oracle(bal, q);
  };
  double lo = 0.0, hi = 2.0 * mean_load / mean_gen;
  if (!(cvar_at(lo) < omega)) {
    hi = 0.0;
  } else {
    while (cvar_at(hi) < omega) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e6) throw InfeasibleRiskError("no capacity scale up to 1e6 reaches the risk floor");
    }
    const double tol = 1e-4 * std::abs(mean_load);
    for (int it = 0; it < 100 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double c = cvar_at(mid);
      if (c < omega) {
        lo = mid;
      } else {
        hi = mid;
        if (c - omega <= 1e-3 * tol) break;
      }
    }
  }

  RiskReport r;
  r.scale_factor = hi;
  r.installed_after = hi * capacities.sum();
  r.cvar_q = cvar_at(hi);
  r.var_q = var_oracle(bal, q);
  r.mean_excess_fraction = mean(bal) / mean_load;
  double cost = 0.0;
  for (std::size_t i = 0; i < plants.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    cost += hi * capacities[k] * capacity_factor(plants[i].output) * lcoe_per_mwh[k];
  }
  r.cost_per_demand_mwh = cost / mean_load;
  return r;
}

inline constexpr double kBalanceQuantiles[] = {0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99};

struct BalanceStats {
  double mean_excess_pct = 0.0;  // mean of (G - L) / mean(L), percent
  double var_q_mw = 0.0;
  double cvar_q_mw = 0.0;
  std::vector<double> quantiles_pct;  // at kBalanceQuantiles
};

/// p-quantile as the ceil(p*T)-th smallest value.
inline double order_quantile(const std::vector<double>& sorted, double p) {
  auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size()) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, sorted.size());
  return sorted[k - 1];
}

inline BalanceStats balance_stats(const Eigen::VectorXd& capacities, const PlantSet& plants,
                                  std::span<const double> load_mw, double q) {
  const std::vector<double> gen = portfolio_output(capacities, plants);
  if (gen.size() != load_mw.size()) throw DatasetError("load and generation differ in length");
  const double mean_load = mean(load_mw);
  std::vector<double> bal(gen.size());
  for (std::size_t t = 0; t < bal.size(); ++t) bal[t] = gen[t] - load_mw[t];
  BalanceStats s;
  s.var_q_mw = var_oracle(bal, q);
  s.cvar_q_mw = cvar_oracle(bal, q);
  std::vector<double> pct(bal.size());
  for (std::size_t t = 0; t < bal.size(); ++t) pct[t] = 100.0 * bal[t] / mean_load;
  s.mean_excess_pct = mean(pct);
  std::sort(pct.begin(), pct.end());
  for (double p : kBalanceQuantiles) s.quantiles_pct.push_back(order_quantile(pct, p));
  return s;
}

struct AppendixAReport {
  std::size_t cv_index = 0;        // min-CV point of frontier C
  double cv_sd_g = 0.0;            // its SD converted to the fixed generation of frontier G
  double min_sd_g = 0.0;           // lowest SD on frontier G
  bool min_cv_shared = false;
  std::vector<double> sd_g;        // converted SD of every frontier-C point
  std::vector<std::size_t> dominated;  // frontier-C points dominated under generation normalization
};

/// Compares a fixed-capacity frontier (C) with a fixed-generation frontier (G)
/// over the same plants. SDs are converted with sigma_G = sigma / G_p * G_F.
/// `tol` is relative and covers solver accuracy.
inline AppendixAReport verify_appendix_a(const Frontier& c, const Frontier& g, double tol = 1e-6) {
  if (c.plant_ids != g.plant_ids) throw ConfigError("verify_appendix_a: frontiers use different plants");
  const auto cv = min_cv_index(c);
  if (!cv) throw DegeneratePortfolioError("verify_appendix_a: frontier C has no usable point");
  double g_fixed = 0.0;
  std::size_t n_g = 0;
  for (const auto& p : g.points) {
    if (!p.ok()) continue;
    g_fixed += p.mean_output_mw;
    ++n_g;
  }
  if (n_g == 0) throw DegeneratePortfolioError("verify_appendix_a: frontier G has no usable point");
  g_fixed /= static_cast<double>(n_g);

  AppendixAReport r;
  r.cv_index = *cv;
  for (const auto& p : c.points) r.sd_g.push_back(p.achieved_sd_abs / p.mean_output_mw * g_fixed);
  r.cv_sd_g = r.sd_g[*cv];
  r.min_sd_g = std::numeric_limits<double>::infinity();
  for (const auto& p : g.points) {
    if (p.ok()) r.min_sd_g = std::min(r.min_sd_g, p.achieved_sd_abs / p.mean_output_mw * g_fixed);
  }
  r.min_cv_shared = std::abs(r.cv_sd_g - r.min_sd_g) <= tol * std::max(r.min_sd_g, 1e-300) + 1e-12;

  // Candidates in generation normalization: frontier G and the min-CV point.
  struct Cand {
    double sd, cf;
  };
  std::vector<Cand> cands{{r.cv_sd_g, c.points[*cv].cf}};
  for (const auto& p : g.points) {
    if (p.ok()) cands.push_back({p.achieved_sd_abs / p.mean_output_mw * g_fixed, p.cf});
  }
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    const auto& p = c.points[i];
    if (!p.ok() || i == *cv) continue;
    for (const auto& q : cands) {
      if (q.sd <= r.sd_g[i] * (1.0 + tol) && q.cf > p.cf * (1.0 + tol)) {
        r.dominated.push_back(i);
        break;
      }
    }
  }
  return r;
}

/// One analysis row per frontier point; the risk columns are NaN without a load.
struct AnalysisRow {
  double cv = 0.0, sharpe = 0.0;
  DiversityReport div;
  RiskReport risk;
};

inline std::vector<AnalysisRow> analyze_frontier(const Frontier& fr, const PlantSet& plants,
                                                 std::span<const double> load_mw, const Eigen::VectorXd& lcoe_per_mwh,
                                                 double q, double omega) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<AnalysisRow> rows;
  for (const auto& p : fr.points) {
    AnalysisRow row;
    const bool usable = p.cf > 0.0 && p.installed_mw > 0.0;
    row.cv = usable ? cv_ratio(p) : nan;
    row.sharpe = usable ? sharpe(p) : nan;
    if (usable) row.div = diversity(p, plants);
    else row.div = {nan, nan, nan, nan};
    row.risk = {nan, nan, nan, nan, nan, nan};
    if (usable && !load_mw.empty()) {
      try {
        row.risk = normalize_to_risk(p.capacities, plants, load_mw, lcoe_per_mwh, q, omega);
      } catch (const InfeasibleRiskError&) {
        // floor out of reach for this mix; columns stay NaN
      }
    }
    rows.push_back(row);
  }
  return rows;
}

inline void write_analysis_csv(std::ostream& out, const std::vector<AnalysisRow>& rows) {
  out << "point_index,cv,sharpe,gd_km,ed,hhi,inv_hhi,scale_factor,cost_per_demand_mwh,var_q_mw,cvar_q_mw,"
         "mean_excess_pct\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    out << k << ',' << format_double(r.cv) << ',' << format_double(r.sharpe) << ',' << format_double(r.div.gd) << ','
        << format_double(r.div.ed) << ',' << format_double(r.div.hhi) << ',' << format_double(r.div.inv_hhi) << ','
        << format_double(r.risk.scale_factor) << ',' << format_double(r.risk.cost_per_demand_mwh) << ','
        << format_double(r.risk.var_q) << ',' << format_double(r.risk.cvar_q) << ','
        << format_double(100.0 * r.risk.mean_excess_fraction) << '\n';
  }
}

}  // namespace vresport
