// Acceptance checks. Prints one "criterion N: PASS|FAIL ..." line per
// criterion. Exits 0 when the failing criteria are exactly those named with
// --expect-fail (none by default), so a documented failure stays visible and
// an unexpected pass or failure still breaks the build.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "normalization_oracle.hpp"
#include "oracles.hpp"
#include "vresport/analysis.hpp"
#include "vresport/config.hpp"
#include "vresport/ingest.hpp"
#include "vresport/runner.hpp"

using namespace vresport;
namespace fs = std::filesystem;

namespace {

const fs::path kData = VRESPORT_DATA_DIR;

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Scenarios of a fixture config with the inputs the runner would build.
struct Fixture {
  RunConfig config;
  ModelData data;
  std::vector<HourStamp> calendar;

  ModelData for_scenario(const ScenarioConfig& sc) const {
    ModelData md = data;
    if (is_cvar(sc.kind)) md.plan = lhs_sample(calendar, sc.samples, config.seed, sc.strata);
    return md;
  }
};

Fixture load_fixture(const fs::path& toml_path) {
  Fixture fx;
  fx.config = load_config(toml_path);
  const auto& dc = fx.config.data;
  auto ds = load_dataset(dc.plants.string(), dc.outputs.string(),
                         dc.demand ? std::optional<std::string>(dc.demand->string()) : std::nullopt,
                         dc.detrend_window_days);
  fx.data.plants = prune_correlated(ds.plants, dc.correlation_threshold);
  fx.data.demand = ds.demand;
  fx.data.peak_mw = dc.peak_mw;
  fx.calendar = ds.timestamps;
  return fx;
}

std::vector<ScenarioConfig> every_kind(const ScenarioConfig& base) {
  std::vector<ScenarioConfig> out;
  for (auto kind : kAllScenarioKinds) {
    ScenarioConfig sc = base;
    sc.kind = kind;
    sc.name = to_string(kind);
    out.push_back(sc);
  }
  return out;
}

// 1. Objective against the weight grid for every kind, plus a closed form.
Verdict solver_vs_grid() {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  double worst = 0;
  int failures = 0, cases = 0, collapsed = 0;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.15, 0.85);
  for (auto kind : kAllScenarioKinds) {
    for (std::uint64_t k = 0; k < 50; ++k) {
      const auto in = oracle::make_instance(1000 + k, 240, 60);
      const auto sc = oracle::scenario(kind, 2);
      const auto ends = frontier_sweep(sc, in.data());
      const double sigma = ends.sigma_lo + u(rng) * (ends.sigma_hi - ends.sigma_lo);
      const auto fr = frontier_at(sc, in.data(), {sigma});
      const oracle::KindOracle ko(in, sc);
      auto ref = oracle::best_at(ko, sigma);
      // A collapsed SD range leaves one feasible portfolio, which no grid
      // hits; the cap cannot bind there, so compare with the free optimum.
      if (!ref.found() && ends.sigma_hi - ends.sigma_lo <= 1e-6 * ends.sigma_hi) {
        ref = oracle::best_at(ko, oracle::kInf);
        ++collapsed;
      }
      ++cases;
      if (!fr.points[0].ok() || !ref.found()) {
        ++failures;
        continue;
      }
      const double rel = std::abs(fr.points[0].objective - ref.value) / std::abs(ref.value);
      worst = std::max(worst, rel);
      if (rel > 1e-3) ++failures;
    }
  }

  ConvexProgram p;
  p.n_vars = p.n_core = 2;
  p.objective = Eigen::VectorXd::Zero(2);
  p.lower = Eigen::VectorXd::Zero(2);
  LinearRow sum;
  sum.core = Eigen::VectorXd::Ones(2);
  sum.rhs = 1.0;
  p.eq_rows.push_back(sum);
  QuadConstraint qc;
  qc.form.Q = Eigen::Vector2d(1.0, 4.0).asDiagonal();
  qc.bound = 1.0;
  p.quad_constraint = qc;
  const auto mv = min_variance(p);
  const double w_err = mv.status == SolveStatus::optimal ? std::max(std::abs(mv.x[0] - 0.8), std::abs(mv.x[1] - 0.2)) : 1.0;

  const double secs = seconds_since(t0);
  v.pass = failures == 0 && w_err <= 1e-6 && secs < 120;
  v.detail = std::to_string(cases - failures) + "/" + std::to_string(cases) + " grid cases (" + std::to_string(collapsed) + " with a collapsed SD range), worst rel " +
             fmt("%.2e", worst) + "; two-asset weight error " + fmt("%.1e", w_err) + "; " + fmt("%.1f", secs) + " s";
  return v;
}

// 2. The (alpha, Z) program against the sorted tail mean.
Verdict cvar_linearization() {
  Verdict v;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0;
  int bad_alpha = 0, failed = 0, cases = 0;
  for (double q : {0.01, 0.05, 0.2}) {
    for (int k = 0; k < 100; ++k) {
      const auto plants = testutil::random_plants(3, 500, 5000 + static_cast<std::uint64_t>(k));
      const double w0 = u(rng), w1 = u(rng), w2 = u(rng);
      const double level = 0.3 + 0.4 * u(rng);
      std::vector<double> bal(500);
      for (std::size_t t = 0; t < 500; ++t) {
        const double load = level * (1 + 0.2 * std::sin(static_cast<double>(t) / 4.0) + 0.1 * u(rng));
        bal[t] = w0 * plants[0].output[t] + w1 * plants[1].output[t] + w2 * plants[2].output[t] - load;
      }
      const auto T = static_cast<Eigen::Index>(bal.size());
      ConvexProgram p;
      p.n_core = 1;
      p.n_vars = 1 + T;
      p.objective = Eigen::VectorXd::Constant(p.n_vars, 1.0 / (q * static_cast<double>(T)));
      p.objective[0] = -1.0;
      p.lower = Eigen::VectorXd::Zero(p.n_vars);
      p.lower[0] = kUnbounded;
      for (Eigen::Index t = 0; t < T; ++t) {
        LinearRow r;
        r.core = Eigen::VectorXd::Ones(1);
        r.aux = {{1 + t, -1.0}};
        r.rhs = bal[static_cast<std::size_t>(t)];
        p.ineq_rows.push_back(r);
      }
      const auto sol = solve(p);
      ++cases;
      if (sol.status != SolveStatus::optimal) {
        ++failed;
        continue;
      }
      worst = std::max(worst, std::abs(-sol.objective - cvar_oracle(bal, q)));
      std::vector<double> sorted = bal;
      std::sort(sorted.begin(), sorted.end());
      const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(T) - 1e-9));
      const double alpha = sol.x[0];
      const double lo = sorted[rank - 1], hi = sorted[std::min(sorted.size() - 1, rank)];
      if (alpha < lo - 1e-8 || alpha > hi + 1e-8) ++bad_alpha;
    }
  }
  v.pass = failed == 0 && worst <= 1e-8 && bad_alpha == 0;
  v.detail = std::to_string(cases) + " programs, " + std::to_string(failed) + " unsolved, worst |CVaR - oracle| " +
             fmt("%.2e", worst) + ", alpha outside [VaR, next order statistic]: " + std::to_string(bad_alpha);
  return v;
}

double share_gap(const FrontierPoint& a, const FrontierPoint& b) {
  double worst = 0;
  for (Eigen::Index i = 0; i < a.capacities.size(); ++i) {
    worst = std::max(worst, std::abs(a.capacities[i] / a.installed_mw - b.capacities[i] / b.installed_mw));
  }
  return worst;
}

// 3. Observed demand that is constant gives the flat frontier.
Verdict flat_demand_equivalence(const Fixture& fx6) {
  Verdict v;
  double worst = 0;
  std::size_t compared = 0, failed = 0;
  auto check = [&](ModelData data, int points) {
    std::fill(data.demand->values.begin(), data.demand->values.end(), 1.0);
    const auto flat = frontier_sweep(oracle::scenario(ScenarioKind::cost_flat, points), data, 4);
    const auto obs = frontier_sweep(oracle::scenario(ScenarioKind::cost_obs, points), data, 4);
    for (std::size_t k = 0; k < flat.points.size(); ++k) {
      if (!flat.points[k].ok() || !obs.points[k].ok()) {
        ++failed;
        continue;
      }
      worst = std::max(worst, share_gap(flat.points[k], obs.points[k]));
      ++compared;
    }
  };
  check(fx6.data, 51);
  for (std::uint64_t s = 0; s < 10; ++s) check(oracle::make_instance(300 + s).data(), 21);
  v.pass = failed == 0 && worst <= 1e-5;
  v.detail = std::to_string(compared) + " point pairs, worst share gap " + fmt("%.2e", worst) +
             (failed ? ", " + std::to_string(failed) + " unsolved" : "");
  return v;
}

// 4. Fixed-capacity vs fixed-generation frontiers with equal per-kW costs.
Verdict generation_normalization() {
  Verdict v;
  int shared = 0, matched = 0, below_flagged = 0;
  const int universes = 20;
  for (int k = 0; k < universes; ++k) {
    const auto in = oracle::make_instance(400 + static_cast<std::uint64_t>(k), 240, 60, true);
    const auto [c, g] = oracle::normalization_frontiers(in, 15);
    const auto r = verify_appendix_a(c, g);
    if (r.min_cv_shared) ++shared;
    if (r.dominated == oracle::dominated_by_grid(in, c, r.cv_index)) ++matched;
    bool all = true;
    const double cv_sigma = c.points[r.cv_index].achieved_sd_abs;
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      if (c.points[i].achieved_sd_abs < cv_sigma * (1 - 1e-9) &&
          std::find(r.dominated.begin(), r.dominated.end(), i) == r.dominated.end()) {
        all = false;
      }
    }
    if (all) ++below_flagged;
  }
  v.pass = shared == universes && matched == universes && below_flagged == universes;
  v.detail = "min-CV shared " + std::to_string(shared) + "/20, dominated set equals grid " + std::to_string(matched) +
             "/20, all low-SD points flagged " + std::to_string(below_flagged) + "/20";
  return v;
}

struct SweepSet {
  std::string label;
  ScenarioConfig sc;
  ModelData data;
  Frontier fr;
};

std::vector<SweepSet> sweep_fixtures(const std::vector<const Fixture*>& fixtures) {
  std::vector<SweepSet> out;
  for (const auto* fx : fixtures) {
    for (auto sc : every_kind(fx->config.scenarios.front())) {
      sc.n_frontier_points = 51;
      SweepSet s{fx->config.data.plants.parent_path().filename().string() + "/" + sc.name, sc, fx->for_scenario(sc), {}};
      s.fr = frontier_sweep(s.sc, s.data, 4);
      out.push_back(std::move(s));
    }
  }
  return out;
}

// 5. Point counts, ascending caps and a monotone objective.
Verdict frontier_shape(const std::vector<SweepSet>& sweeps) {
  Verdict v;
  std::string bad;
  double worst = 0;
  for (const auto& s : sweeps) {
    bool ok = s.fr.points.size() == 51 && s.fr.failures() == 0;
    for (std::size_t k = 1; k < s.fr.points.size(); ++k) {
      const auto& a = s.fr.points[k - 1];
      const auto& b = s.fr.points[k];
      if (!(b.sigma_cap > a.sigma_cap) && s.fr.sigma_hi > s.fr.sigma_lo) ok = false;
      const double rise = (b.objective - a.objective) / std::max(1.0, std::abs(a.objective));
      worst = std::max(worst, rise);
      if (rise > 1e-6) ok = false;
    }
    if (!ok) bad += " " + s.label;
  }
  v.pass = bad.empty();
  v.detail = std::to_string(sweeps.size()) + " sweeps of 51 points, worst relative objective rise " + fmt("%.1e", worst) +
             (bad.empty() ? "" : ", failing:" + bad);
  return v;
}

// 6. Risk normalization accuracy and the rescale factor of CVaR portfolios.
Verdict same_risk_scaling(const std::vector<SweepSet>& sweeps, const Fixture& fx6) {
  Verdict v;
  double worst_floor = 0, worst_factor = 0, lo_factor = 1e300, hi_factor = 0;
  std::size_t rows = 0, cvar_rows = 0, unreachable = 0, unreachable_cvar = 0;
  for (const auto& s : sweeps) {
    const auto load = scenario_load_mw(s.sc, s.data);
    if (load.empty()) continue;
    const double mean_load = oracle::mean_of(load);
    const auto lc = scenario_lcoe(s.sc, s.data.plants);
    for (const auto& p : s.fr.points) {
      if (!p.ok() || !(p.mean_output_mw > 0)) continue;
      RiskReport r;
      try {
        r = normalize_to_risk(p.capacities, s.data.plants, load, lc, s.sc.beta, s.sc.omega);
      } catch (const InfeasibleRiskError&) {
        // No output in the worst hours: no scale reaches the floor.
        ++unreachable;
        if (is_cvar(s.sc.kind)) ++unreachable_cvar;
        continue;
      }
      worst_floor = std::max(worst_floor, std::abs(r.cvar_q - s.sc.omega) / mean_load);
      ++rows;
      if (is_cvar(s.sc.kind) && s.sc.samples == 3000) {
        worst_factor = std::max(worst_factor, std::abs(r.scale_factor - 1));
        lo_factor = std::min(lo_factor, r.scale_factor);
        hi_factor = std::max(hi_factor, r.scale_factor);
        ++cvar_rows;
      }
    }
  }
  // Reference: sampling every hour leaves nothing for the rescale to fix.
  double full_dev = 0;
  for (auto kind : {ScenarioKind::cvar_flat, ScenarioKind::cvar_obs}) {
    auto sc = oracle::scenario(kind, 5);
    sc.samples = fx6.calendar.size();
    const auto md = fx6.for_scenario(sc);
    const auto fr = frontier_sweep(sc, md, 4);
    const auto load = scenario_load_mw(sc, md);
    for (const auto& p : fr.points) {
      const auto r = normalize_to_risk(p.capacities, md.plants, load, scenario_lcoe(sc, md.plants), sc.beta, sc.omega);
      full_dev = std::max(full_dev, std::abs(r.scale_factor - 1));
    }
  }
  v.pass = worst_floor <= 1e-4 && cvar_rows > 0 && unreachable_cvar == 0 && worst_factor <= 0.05;
  v.detail = std::to_string(rows) + " portfolios rescaled (" + std::to_string(unreachable) +
             " others cannot reach the floor, " + std::to_string(unreachable_cvar) + " of them CVaR), worst |CVaR - floor| / mean demand " + fmt("%.1e", worst_floor) +
             "; " + std::to_string(cvar_rows) + " CVaR portfolios (M = 3000) need factors " + fmt("%.4f", lo_factor) +
             ".." + fmt("%.4f", hi_factor) + " (limit 1 +- 0.05); with every hour sampled |factor - 1| <= " + fmt("%.1e", full_dev);
  return v;
}

// 7. Share and distance identities over random portfolios.
Verdict diversity_identities() {
  Verdict v;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int bad_hhi = 0, bad_ed = 0, bad_gd = 0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(k % 7);
    auto plants = testutil::random_plants(n, 96, 7000 + static_cast<std::uint64_t>(k));
    for (auto& p : plants) p.location = {-30 + 25 * u(rng), -70 + 35 * u(rng)};

    // Equal generation shares.
    Eigen::VectorXd equal(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) equal[static_cast<Eigen::Index>(i)] = 1.0 / oracle::mean_of(plants[i].output);
    if (diversity(equal, plants).inv_hhi != static_cast<double>(n) &&
        std::abs(diversity(equal, plants).inv_hhi - static_cast<double>(n)) > 1e-12 * static_cast<double>(n)) {
      ++bad_hhi;
    }

    Eigen::VectorXd cap(static_cast<Eigen::Index>(n));
    for (auto& c : cap) c = u(rng);

    // Identical profiles.
    PlantSet same = plants;
    for (auto& p : same) p.output = plants[0].output;
    if (diversity(cap, same).ed != 0.0) ++bad_ed;

    // Relabeling.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    PlantSet shuffled;
    Eigen::VectorXd cap2(cap.size());
    for (std::size_t i = 0; i < n; ++i) {
      shuffled.push_back(plants[perm[i]]);
      cap2[static_cast<Eigen::Index>(i)] = cap[static_cast<Eigen::Index>(perm[i])];
    }
    const auto a = diversity(cap, plants), b = diversity(cap2, shuffled);
    if (std::abs(a.gd - b.gd) > 1e-9 * std::max(1.0, a.gd) || std::abs(a.ed - b.ed) > 1e-9 * std::max(1.0, a.ed) ||
        std::abs(a.hhi - b.hhi) > 1e-12) {
      ++bad_gd;
    }
  }
  v.pass = bad_hhi == 0 && bad_ed == 0 && bad_gd == 0;
  v.detail = "1000 portfolios: inverse HHI != N " + std::to_string(bad_hhi) + ", ED != 0 for identical profiles " +
             std::to_string(bad_ed) + ", relabeling changed GD/ED/HHI " + std::to_string(bad_gd);
  return v;
}

std::map<std::string, std::string> run_outputs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    std::ifstream f(e.path(), std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    out[fs::relative(e.path(), dir).string()] = s.str();
  }
  return out;
}

// 8. Repeated runs and different thread counts give the same bytes.
Verdict determinism(const fs::path& config_path) {
  Verdict v;
  const auto config = load_config(config_path);
  const fs::path base = fs::temp_directory_path() / ("vresport_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);
  run(config, base / "a", {std::nullopt, std::nullopt, 1}, config_path);
  run(config, base / "b", {std::nullopt, std::nullopt, 1}, config_path);
  run(config, base / "c", {std::nullopt, std::nullopt, 8}, config_path);
  const auto a = run_outputs(base / "a");
  const bool repeat = a == run_outputs(base / "b");
  const bool threads = a == run_outputs(base / "c");
  fs::remove_all(base);
  v.pass = repeat && threads && !a.empty();
  v.detail = std::to_string(a.size()) + " output files; repeat run " + (repeat ? "identical" : "differs") +
             ", threads 1 vs 8 " + (threads ? "identical" : "differs");
  return v;
}

// 9. CVaR_Flat portfolios against Cost_Flat at the same SD per MWh.
Verdict cvar_vs_cost(const Fixture& fx6) {
  Verdict v;
  ScenarioConfig base = fx6.config.scenarios.front();
  auto cvar_sc = base, cost_sc = base;
  cvar_sc.kind = ScenarioKind::cvar_flat;
  cvar_sc.name = "CVaR_Flat";
  cost_sc.kind = ScenarioKind::cost_flat;
  cost_sc.name = "Cost_Flat";
  cvar_sc.n_frontier_points = cost_sc.n_frontier_points = 51;
  const auto cvar = frontier_sweep(cvar_sc, fx6.for_scenario(cvar_sc), 4);
  const auto cost = frontier_sweep(cost_sc, fx6.data, 4);
  const double k = cost.points.front().mean_output_mw;

  // Cost_Flat solved at each CVaR point's SD per unit of mean output.
  std::vector<double> caps;
  double c_lo = 1e300, c_hi = 0;
  for (const auto& p : cvar.points) {
    const double x = p.achieved_sd_abs / p.mean_output_mw;
    c_lo = std::min(c_lo, x);
    c_hi = std::max(c_hi, x);
    caps.push_back(std::min(x * k, cost.sigma_hi));
  }
  const auto at = frontier_at(cost_sc, fx6.data, caps, 4);
  std::vector<std::pair<double, double>> by_sd;
  for (const auto& p : cvar.points) by_sd.push_back({p.achieved_sd_abs / p.mean_output_mw, p.cost_per_mwh});
  std::sort(by_sd.begin(), by_sd.end());  // frontier_at returns ascending caps
  int below = 0;
  double worst_gap = 1e300;
  for (std::size_t i = 0; i < by_sd.size(); ++i) {
    const auto& ref = at.points[i];
    if (!ref.ok()) {
      ++below;
      continue;
    }
    const double gap = (by_sd[i].second - ref.cost_per_mwh) / ref.cost_per_mwh;
    worst_gap = std::min(worst_gap, gap);
    if (gap < -1e-6) ++below;
  }
  const double f_lo = cost.sigma_lo / k, f_hi = cost.sigma_hi / k;
  const double tol = 1e-6 * f_hi;
  const bool inside = c_lo >= f_lo - tol && c_hi <= f_hi + tol;
  const bool strict = c_lo > f_lo + tol || c_hi < f_hi - tol;
  v.pass = below == 0 && inside && strict && cvar.failures() == 0;
  v.detail = std::to_string(cvar.points.size()) + " CVaR_Flat points, " + std::to_string(below) +
             " cheaper than Cost_Flat (smallest relative premium " + fmt("%.2e", worst_gap) + "); SD/MWh range [" +
             fmt("%.5f", c_lo) + ", " + fmt("%.5f", c_hi) + "] within [" + fmt("%.5f", f_lo) + ", " +
             fmt("%.5f", f_hi) + "]";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected, failed;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--expect-fail" && i + 1 < argc) {
      expected.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--expect-fail N]...\n");
      return 2;
    }
  }
  auto report = [&](int n, const std::function<Verdict()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = f();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) failed.insert(n);
    std::printf("criterion %d: %s %s [%.1f s]\n", n, v.pass ? "PASS" : "FAIL", v.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  };

  const Fixture fx3 = load_fixture(kData / "fixture3" / "cost_flat.toml");
  const Fixture fx6 = load_fixture(kData / "fixture6" / "all_kinds.toml");

  report(1, solver_vs_grid);
  report(2, cvar_linearization);
  report(3, [&] { return flat_demand_equivalence(fx6); });
  report(4, generation_normalization);
  const auto sweeps = sweep_fixtures({&fx3, &fx6});
  report(5, [&] { return frontier_shape(sweeps); });
  report(6, [&] { return same_risk_scaling(sweeps, fx6); });
  report(7, diversity_identities);
  report(8, [&] { return determinism(kData / "fixture6" / "all_kinds.toml"); });
  report(9, [&] { return cvar_vs_cost(fx6); });
  auto list = [](const std::set<int>& s) {
    std::string out;
    for (int n : s) out += (out.empty() ? "" : ", ") + std::to_string(n);
    return out.empty() ? std::string("none") : out;
  };
  std::printf("failed: %s (expected: %s)\n", list(failed).c_str(), list(expected).c_str());
  return failed == expected ? 0 : 1;
}
