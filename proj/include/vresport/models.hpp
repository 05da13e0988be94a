#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "vresport/csv.hpp"
#include "vresport/errors.hpp"
#include "vresport/ingest.hpp"
#include "vresport/sampling.hpp"
#include "vresport/solver.hpp"
#include "vresport/statistics.hpp"
#include "vresport/types.hpp"

namespace vresport {

enum class ScenarioKind { trad_flat, trad_obs, cost_flat, cost_obs, cost_flat_lcpv, cvar_flat, cvar_obs };

inline constexpr ScenarioKind kAllScenarioKinds[] = {
    ScenarioKind::trad_flat,      ScenarioKind::trad_obs,  ScenarioKind::cost_flat, ScenarioKind::cost_obs,
    ScenarioKind::cost_flat_lcpv, ScenarioKind::cvar_flat, ScenarioKind::cvar_obs};

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::trad_flat: return "Trad_Flat";
    case ScenarioKind::trad_obs: return "Trad_Obs";
    case ScenarioKind::cost_flat: return "Cost_Flat";
    case ScenarioKind::cost_obs: return "Cost_Obs";
    case ScenarioKind::cost_flat_lcpv: return "Cost_Flat_lcpv";
    case ScenarioKind::cvar_flat: return "CVaR_Flat";
    case ScenarioKind::cvar_obs: return "CVaR_Obs";
  }
  return "unknown";
}

inline ScenarioKind parse_scenario_kind(std::string_view text) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  };
  const std::string want = lower(text);
  for (auto k : kAllScenarioKinds) {
    if (lower(to_string(k)) == want) return k;
  }
  throw ConfigError("unknown scenario kind '" + std::string(text) +
                    "' (expected one of Trad_Flat, Trad_Obs, Cost_Flat, Cost_Obs, Cost_Flat_lcpv, CVaR_Flat, CVaR_Obs)");
}

inline bool is_trad(ScenarioKind k) { return k == ScenarioKind::trad_flat || k == ScenarioKind::trad_obs; }
inline bool is_cvar(ScenarioKind k) { return k == ScenarioKind::cvar_flat || k == ScenarioKind::cvar_obs; }
inline bool uses_observed_demand(ScenarioKind k) {
  return k == ScenarioKind::trad_obs || k == ScenarioKind::cost_obs || k == ScenarioKind::cvar_obs;
}

struct Finance {
  double discount_rate = 0.08;
  int wind_lifetime_years = 25;
  int pv_lifetime_years = 25;

  int lifetime(Technology t) const { return t == Technology::wind ? wind_lifetime_years : pv_lifetime_years; }
};

struct ScenarioConfig {
  std::string name;
  ScenarioKind kind = ScenarioKind::cost_flat;
  int n_frontier_points = 51;
  double beta = 0.05;   // tail fraction
  double omega = 0.0;   // balance floor, MW
  std::size_t samples = 3000;
  Finance finance;
  std::optional<double> pv_cost_multiplier;  // default 0.5 for Cost_Flat_lcpv, else 1
  StrataSpec strata;

  double pv_multiplier() const {
    return pv_cost_multiplier.value_or(kind == ScenarioKind::cost_flat_lcpv ? 0.5 : 1.0);
  }

  void validate() const {
    if (!(beta > 0.0 && beta < 1.0)) {
      throw ConfigError("scenario " + name + ": beta = " + format_double(beta) + " outside the valid range (0, 1)");
    }
    if (n_frontier_points < 2) throw ConfigError("scenario " + name + ": points must be >= 2");
    if (samples < 1) throw ConfigError("scenario " + name + ": samples must be >= 1");
    if (!std::isfinite(omega)) throw ConfigError("scenario " + name + ": omega must be finite");
    if (!(finance.discount_rate >= 0.0)) throw ConfigError("scenario " + name + ": discount_rate must be >= 0");
    if (finance.wind_lifetime_years < 1 || finance.pv_lifetime_years < 1) {
      throw ConfigError("scenario " + name + ": lifetimes must be >= 1 year");
    }
    if (!(pv_multiplier() > 0.0)) throw ConfigError("scenario " + name + ": pv_cost_multiplier must be > 0");
  }
};

inline double capital_recovery_factor(double rate, int years) {
  if (years < 1) throw ValidationError("capital recovery factor: lifetime must be >= 1");
  if (rate < 0.0) throw ValidationError("capital recovery factor: discount rate must be >= 0");
  if (rate == 0.0) return 1.0 / years;
  const double g = std::pow(1.0 + rate, years);
  return rate * g / (g - 1.0);
}

/// Levelized cost in currency/MWh from per-kW costs: (I*CRF + OM) / (8.76 CF).
inline double lcoe(double invest_per_kw, double om_per_kw_year, double cf, double rate, int years) {
  if (!(cf > 0.0)) throw DegeneratePlantError("lcoe: capacity factor must be > 0");
  return (invest_per_kw * capital_recovery_factor(rate, years) + om_per_kw_year) / (8.76 * cf);
}

inline double lcoe(const PlantSeries& plant, const Finance& finance, double pv_cost_multiplier = 1.0) {
  const double m = plant.technology == Technology::pv ? pv_cost_multiplier : 1.0;
  const double cf = capacity_factor(plant.output);
  if (!(cf > 0.0)) throw DegeneratePlantError("lcoe: plant " + plant.id + " has zero capacity factor");
  return lcoe(m * plant.invest_cost, m * plant.om_cost, cf, finance.discount_rate,
              finance.lifetime(plant.technology));
}

/// Lower-tail mean of `balance` with exact tail mass q*T (the boundary sample
/// is weighted fractionally).
inline double cvar_oracle(std::span<const double> balance, double q) {
  if (balance.empty()) throw ValidationError("cvar_oracle: empty balance");
  if (!(q > 0.0 && q <= 1.0)) throw ValidationError("cvar_oracle: q must be in (0, 1]");
  std::vector<double> v(balance.begin(), balance.end());
  const double mass = q * static_cast<double>(v.size());
  const auto k = std::min(v.size(), static_cast<std::size_t>(std::ceil(mass)) + 1);
  std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  v.resize(k);
  double taken = 0.0, sum = 0.0;
  for (double x : v) {
    const double w = std::min(1.0, mass - taken);
    if (w <= 0.0) break;
    sum += w * x;
    taken += w;
  }
  return sum / mass;
}

/// Empirical VaR: the ceil(q*T)-th smallest value.
inline double var_oracle(std::span<const double> balance, double q) {
  if (balance.empty()) throw ValidationError("var_oracle: empty balance");
  std::vector<double> v(balance.begin(), balance.end());
  auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size()) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, v.size());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end());
  return v[k - 1];
}

/// Inputs shared by every scenario of a run.
struct ModelData {
  PlantSet plants;
  std::optional<DemandSeries> demand;  // detrended observed demand
  std::optional<double> peak_mw;       // defaults to demand->peak
  std::optional<SamplePlan> plan;      // required by the CVaR kinds
};

/// A scenario turned into a program. Variables are capacities in units of
/// `reference_mw` (then alpha and the Z's for CVaR kinds).
struct AssembledModel {
  ScenarioKind kind{};
  ConvexProgram program;
  double reference_mw = 1.0;
  std::size_t n_plants = 0;
  Eigen::VectorXd mu;         // capacity factors
  Eigen::VectorXd unit_cost;  // currency/MWh in the objective (zero for Trad kinds)
  Eigen::VectorXd lcoe;       // currency/MWh used for reporting
  std::optional<DemandGen> demandgen;
  QuadraticForm variance_mw;  // balance variance in MW^2 as a function of capacities (MW)
  double fixed_total = 0.0;   // Trad: capacity sum; Cost: mean output; CVaR: unused

  double variance_of(const Eigen::VectorXd& capacities_mw) const { return variance_mw.value(capacities_mw); }
};

namespace models_detail {

inline DemandGen flat_demandgen(double level_mw, std::size_t length) {
  DemandGen g;
  g.output.assign(length, -1.0);
  g.capacity = level_mw;
  g.capacity_factor = -1.0;
  return g;
}

}  // namespace models_detail

/// Builds the program for `scenario`. Without `sigma_cap` the variance bound
/// is left out (the form is still kept in `variance_mw`).
inline AssembledModel assemble(const ScenarioConfig& scenario, const ModelData& data,
                               std::optional<double> sigma_cap = std::nullopt) {
  scenario.validate();
  const auto& plants = data.plants;
  if (plants.empty()) throw ConfigError("scenario " + scenario.name + ": no plants");
  const std::size_t n = plants.size();
  const std::size_t len = plants.front().output.size();
  for (const auto& p : plants) {
    if (p.output.size() != len) throw DatasetError("plant " + p.id + " has a different series length");
  }
  const ScenarioKind kind = scenario.kind;
  if (uses_observed_demand(kind) && !data.demand) {
    throw ConfigError("scenario " + scenario.name + " (" + to_string(kind) + ") requires a demand series");
  }
  if (is_cvar(kind) && !data.plan) {
    throw ConfigError("scenario " + scenario.name + " (" + to_string(kind) + ") requires a sample plan");
  }
  if (data.demand && data.demand->values.size() != len) throw DatasetError("demand length differs from plant series");

  AssembledModel m;
  m.kind = kind;
  m.n_plants = n;
  const double peak = data.demand ? data.peak_mw.value_or(data.demand->peak) : 1.0;
  const double mean_demand_mw = data.demand ? peak * mean(data.demand->values) : 1.0;

  if (uses_observed_demand(kind)) m.demandgen = build_demandgen(*data.demand, peak);
  else if (kind == ScenarioKind::cvar_flat) m.demandgen = models_detail::flat_demandgen(mean_demand_mw, len);

  const double ref = m.demandgen ? m.demandgen->capacity : (data.demand ? peak : 1.0);
  if (!(ref > 0.0)) throw ValidationError("reference capacity must be positive");
  m.reference_mw = ref;

  m.mu.resize(static_cast<Eigen::Index>(n));
  m.lcoe.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    m.mu[static_cast<Eigen::Index>(i)] = capacity_factor(plants[i].output);
    m.lcoe[static_cast<Eigen::Index>(i)] = lcoe(plants[i], scenario.finance, scenario.pv_multiplier());
  }
  m.unit_cost = is_trad(kind) ? Eigen::VectorXd::Zero(m.lcoe.size()) : Eigen::VectorXd(m.lcoe);

  // Balance variance: P'SP + 2 P_L P's_L + P_L^2 s_LL
  const CovMatrix cov = covariance_matrix(plants, m.demandgen);
  const auto ni = static_cast<Eigen::Index>(n);
  m.variance_mw.Q = cov.values.topLeftCorner(ni, ni);
  m.variance_mw.g = Eigen::VectorXd::Zero(ni);
  if (m.demandgen) {
    const double pl = m.demandgen->capacity;
    m.variance_mw.g = pl * cov.values.col(ni).head(ni);
    m.variance_mw.h = pl * pl * cov.values(ni, ni);
  }

  const std::size_t n_samples = is_cvar(kind) ? data.plan->indices.size() : 0;
  ConvexProgram& p = m.program;
  p.n_core = ni + (is_cvar(kind) ? 1 : 0);
  p.n_vars = p.n_core + static_cast<Eigen::Index>(n_samples);
  p.objective = Eigen::VectorXd::Zero(p.n_vars);
  p.lower = Eigen::VectorXd::Zero(p.n_vars);
  for (const auto& pl : plants) p.names.push_back(pl.id);

  if (is_trad(kind)) {
    p.objective.head(ni) = -m.mu;
  } else {
    p.objective.head(ni) = m.unit_cost.cwiseProduct(m.mu);
  }

  if (is_trad(kind)) {
    m.fixed_total = m.demandgen ? m.demandgen->capacity : (data.demand ? peak : 1.0);
    LinearRow row;
    row.core = Eigen::VectorXd::Ones(p.n_core);
    row.rhs = m.fixed_total / ref;
    p.eq_rows.push_back(row);
  } else if (!is_cvar(kind)) {
    m.fixed_total = m.demandgen ? m.demandgen->capacity * std::abs(m.demandgen->capacity_factor)
                                : (data.demand ? mean_demand_mw : 1.0);
    LinearRow row;
    row.core = m.mu;
    row.rhs = m.fixed_total / ref;
    p.eq_rows.push_back(row);
  } else {
    const auto a = ni;  // alpha
    p.lower[a] = kUnbounded;
    p.names.emplace_back("alpha");
    const double bm = scenario.beta * static_cast<double>(n_samples);
    LinearRow budget;
    budget.core = Eigen::VectorXd::Zero(p.n_core);
    budget.core[a] = -1.0;
    for (std::size_t s = 0; s < n_samples; ++s) budget.aux.emplace_back(p.n_core + static_cast<Eigen::Index>(s), 1.0 / bm);
    budget.rhs = -scenario.omega / ref;
    p.ineq_rows.push_back(std::move(budget));
    const auto& dg = *m.demandgen;
    for (std::size_t s = 0; s < n_samples; ++s) {
      const std::size_t t = data.plan->indices[s];
      if (t >= len) throw ValidationError("sample plan index " + std::to_string(t) + " outside the series");
      LinearRow row;
      row.core = Eigen::VectorXd::Zero(p.n_core);
      for (std::size_t i = 0; i < n; ++i) row.core[static_cast<Eigen::Index>(i)] = -plants[i].output[t];
      row.core[a] = 1.0;
      row.aux.emplace_back(p.n_core + static_cast<Eigen::Index>(s), -1.0);
      row.rhs = dg.output[t] * dg.capacity / ref;
      p.ineq_rows.push_back(std::move(row));
      p.names.push_back("z" + std::to_string(s));
    }
  }

  if (sigma_cap) {
    QuadConstraint qc;
    qc.form.Q = m.variance_mw.Q;
    qc.form.g = m.variance_mw.g / ref;
    qc.form.h = m.variance_mw.h / (ref * ref);
    qc.bound = (*sigma_cap / ref) * (*sigma_cap / ref);
    p.quad_constraint = qc;
  }
  return m;
}

/// Hourly load in MW a scenario's portfolios are judged against: the flat
/// mean-demand level for CVaR_Flat, the observed demand otherwise, empty when
/// the data has no demand.
inline std::vector<double> scenario_load_mw(const ScenarioConfig& scenario, const ModelData& data) {
  const std::size_t len = data.plants.empty() ? 0 : data.plants.front().output.size();
  if (!data.demand) {
    if (scenario.kind == ScenarioKind::cvar_flat) return std::vector<double>(len, 1.0);
    return {};
  }
  const double peak = data.peak_mw.value_or(data.demand->peak);
  if (scenario.kind == ScenarioKind::cvar_flat) {
    return std::vector<double>(data.demand->values.size(), peak * mean(data.demand->values));
  }
  std::vector<double> out(data.demand->values.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = peak * data.demand->values[t];
  return out;
}

/// Per-plant LCOE under a scenario's finance and PV cost multiplier.
inline Eigen::VectorXd scenario_lcoe(const ScenarioConfig& scenario, const PlantSet& plants) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(plants.size()));
  for (std::size_t i = 0; i < plants.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = lcoe(plants[i], scenario.finance, scenario.pv_multiplier());
  }
  return out;
}

/// Adds the variance bound to an assembled model (sigma in MW).
inline ConvexProgram with_sigma_cap(const AssembledModel& m, double sigma_mw) {
  ConvexProgram p = m.program;
  const double ref = m.reference_mw;
  QuadConstraint qc;
  qc.form.Q = m.variance_mw.Q;
  qc.form.g = m.variance_mw.g / ref;
  qc.form.h = m.variance_mw.h / (ref * ref);
  qc.bound = (sigma_mw / ref) * (sigma_mw / ref);
  p.quad_constraint = qc;
  return p;
}

struct FrontierPoint {
  double sigma_cap = 0.0;  // MW
  Eigen::VectorXd capacities;  // MW per plant
  double achieved_sd_abs = 0.0;  // MW
  double achieved_sd_per_cap = 0.0;
  double cf = 0.0;
  double cost_per_mwh = 0.0;
  double mean_output_mw = 0.0;
  double installed_mw = 0.0;
  double objective = 0.0;
  double alpha_mw = 0.0;  // CVaR kinds only
  SolveStatus status = SolveStatus::max_iter;
  int iterations = 0;
  double seconds = 0.0;

  bool ok() const { return status == SolveStatus::optimal; }
};

inline FrontierPoint make_point(const AssembledModel& m, const Solution& sol, double sigma_cap) {
  FrontierPoint fp;
  fp.sigma_cap = sigma_cap;
  fp.status = sol.status;
  fp.iterations = sol.iterations;
  const auto n = static_cast<Eigen::Index>(m.n_plants);
  fp.capacities = sol.x.head(n) * m.reference_mw;
  fp.installed_mw = fp.capacities.sum();
  fp.mean_output_mw = fp.capacities.dot(m.mu);
  fp.achieved_sd_abs = std::sqrt(std::max(0.0, m.variance_of(fp.capacities)));
  fp.achieved_sd_per_cap = fp.installed_mw > 0 ? fp.achieved_sd_abs / fp.installed_mw : 0.0;
  fp.cf = fp.installed_mw > 0 ? fp.mean_output_mw / fp.installed_mw : 0.0;
  const double cost = fp.capacities.dot(m.lcoe.cwiseProduct(m.mu));
  fp.cost_per_mwh = fp.mean_output_mw > 0 ? cost / fp.mean_output_mw : 0.0;
  fp.objective = sol.objective * m.reference_mw;
  if (is_cvar(m.kind)) fp.alpha_mw = sol.x[n] * m.reference_mw;
  return fp;
}

struct Frontier {
  std::string scenario;
  ScenarioKind kind{};
  std::vector<std::string> plant_ids;
  double sigma_lo = 0.0, sigma_hi = 0.0;
  std::vector<FrontierPoint> points;  // ascending sigma_cap

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const auto& p) { return !p.ok(); }));
  }
};

/// Runs `count` independent jobs on up to `threads` workers; job i writes
/// only slot i so results do not depend on scheduling.
template <typename Job>
void parallel_for(std::size_t count, int threads, Job&& job) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  }
}

namespace models_detail {

inline Frontier frontier_header(const ScenarioConfig& scenario, const ModelData& data) {
  Frontier fr;
  fr.scenario = scenario.name;
  fr.kind = scenario.kind;
  for (const auto& p : data.plants) fr.plant_ids.push_back(p.id);
  return fr;
}

inline double sd_of(const AssembledModel& m, const Solution& sol) {
  const auto n = static_cast<Eigen::Index>(m.n_plants);
  return std::sqrt(std::max(0.0, m.variance_of(sol.x.head(n) * m.reference_mw)));
}

inline Solution minimum_variance_point(const AssembledModel& m, const std::string& name, const SolverOptions& opt) {
  const Solution low = min_variance(with_sigma_cap(m, 1.0), opt);
  if (low.status != SolveStatus::optimal) {
    throw Error("scenario " + name + ": minimum-variance solve ended " + to_string(low.status) +
                " (no feasible portfolio)");
  }
  return low;
}

// One solve per cap. A cap at the minimum SD has no interior; when its solve
// does not converge the minimum-variance point is used instead.
inline void solve_points(const AssembledModel& m, Frontier& fr, const std::vector<double>& sigmas, const Solution& low,
                         double sigma_lo, int threads, const SolverOptions& opt) {
  fr.points.resize(sigmas.size());
  parallel_for(sigmas.size(), threads, [&](std::size_t i) {
    const double sigma = sigmas[i];
    const auto start = std::chrono::steady_clock::now();
    Solution sol = solve(with_sigma_cap(m, sigma), opt);
    if (sol.status != SolveStatus::optimal && std::abs(sigma - sigma_lo) <= 1e-7 * sigma_lo) {
      sol = low;
      sol.objective = m.program.objective_value(low.x);
    }
    FrontierPoint fp = make_point(m, sol, sigma);
    fp.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    fr.points[i] = std::move(fp);
  });
}

}  // namespace models_detail

/// Solves both endpoints, then one program per point of an equally spaced
/// sigma grid between them.
inline Frontier frontier_sweep(const ScenarioConfig& scenario, const ModelData& data, int threads = 1,
                               const SolverOptions& opt = {}) {
  using namespace models_detail;
  const AssembledModel m = assemble(scenario, data);
  Frontier fr = frontier_header(scenario, data);
  const Solution low = minimum_variance_point(m, scenario.name, opt);
  const Solution high = unconstrained_sd_endpoint(with_sigma_cap(m, 1.0), opt);
  if (high.status != SolveStatus::optimal) {
    throw Error("scenario " + scenario.name + ": unconstrained endpoint solve ended " + to_string(high.status));
  }
  fr.sigma_lo = sd_of(m, low);
  fr.sigma_hi = std::max(fr.sigma_lo, sd_of(m, high));

  const auto k = static_cast<std::size_t>(scenario.n_frontier_points);
  std::vector<double> sigmas(k);
  for (std::size_t i = 0; i < k; ++i) {
    sigmas[i] = i + 1 == k ? fr.sigma_hi
                           : fr.sigma_lo + (fr.sigma_hi - fr.sigma_lo) * static_cast<double>(i) /
                                               static_cast<double>(k - 1);
  }
  solve_points(m, fr, sigmas, low, fr.sigma_lo, threads, opt);
  return fr;
}

/// Solves the scenario at the given caps (MW), returned in ascending order.
/// Caps below the minimum SD come back infeasible.
inline Frontier frontier_at(const ScenarioConfig& scenario, const ModelData& data, std::vector<double> sigmas,
                            int threads = 1, const SolverOptions& opt = {}) {
  using namespace models_detail;
  const AssembledModel m = assemble(scenario, data);
  Frontier fr = frontier_header(scenario, data);
  const Solution low = minimum_variance_point(m, scenario.name, opt);
  fr.sigma_lo = sd_of(m, low);
  std::sort(sigmas.begin(), sigmas.end());
  fr.sigma_hi = sigmas.empty() ? fr.sigma_lo : std::max(fr.sigma_lo, sigmas.back());
  solve_points(m, fr, sigmas, low, fr.sigma_lo, threads, opt);
  return fr;
}

inline void write_frontier_csv(std::ostream& out, const Frontier& fr) {
  out << "sigma_cap,achieved_sd_per_cap,cf,cost_per_mwh,installed_mw,mean_output_mw,status\n";
  for (const auto& p : fr.points) {
    out << format_double(p.sigma_cap) << ',' << format_double(p.achieved_sd_per_cap) << ',' << format_double(p.cf)
        << ',' << format_double(p.cost_per_mwh) << ',' << format_double(p.installed_mw) << ','
        << format_double(p.mean_output_mw) << ',' << to_string(p.status) << '\n';
  }
}

inline void write_weights_csv(std::ostream& out, const Frontier& fr) {
  out << "point_index,plant_id,capacity_mw,share\n";
  for (std::size_t k = 0; k < fr.points.size(); ++k) {
    const auto& p = fr.points[k];
    for (std::size_t i = 0; i < fr.plant_ids.size(); ++i) {
      const double c = p.capacities[static_cast<Eigen::Index>(i)];
      out << k << ',' << fr.plant_ids[i] << ',' << format_double(c) << ','
          << format_double(p.installed_mw > 0 ? c / p.installed_mw : 0.0) << '\n';
    }
  }
}

}  // namespace vresport
