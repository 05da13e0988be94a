#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vresport/analysis.hpp"
#include "vresport/config.hpp"
#include "vresport/csv.hpp"
#include "vresport/errors.hpp"
#include "vresport/ingest.hpp"
#include "vresport/models.hpp"
#include "vresport/sampling.hpp"

namespace vresport {

enum ExitCode : int { exit_ok = 0, exit_solve_failure = 1, exit_config_error = 2 };

/// Hex SHA-256 of a file's bytes.
inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256: digest unavailable");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> points;
  std::optional<int> threads;
};

struct ScenarioResult {
  std::string name;
  ScenarioKind kind{};
  std::size_t n_points = 0;
  std::size_t failures = 0;
  std::string error;  // set when the sweep could not run at all
  std::vector<std::string> outputs;
  std::vector<double> solve_seconds;
};

struct RunResult {
  int exit_code = exit_ok;
  std::vector<ScenarioResult> scenarios;
};

namespace runner_detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  return f;
}

inline nlohmann::ordered_json number(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json summarize(const Frontier& fr, const std::vector<AnalysisRow>& rows) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(fr.kind);
  j["n_points"] = fr.points.size();
  j["failures"] = fr.failures();
  j["sigma_range"] = {number(fr.sigma_lo), number(fr.sigma_hi)};
  std::optional<std::size_t> cheapest, calmest;
  for (std::size_t i = 0; i < fr.points.size(); ++i) {
    const auto& p = fr.points[i];
    if (!p.ok()) continue;
    if (!cheapest || p.cost_per_mwh < fr.points[*cheapest].cost_per_mwh) cheapest = i;
    if (!calmest || p.achieved_sd_abs < fr.points[*calmest].achieved_sd_abs) calmest = i;
  }
  j["min_cost"] = cheapest ? number(fr.points[*cheapest].cost_per_mwh) : nullptr;
  j["min_sd"] = calmest ? number(fr.points[*calmest].achieved_sd_abs) : nullptr;
  const auto cv = min_cv_index(fr);
  j["min_cv_index"] = cv ? nlohmann::ordered_json(*cv) : nlohmann::ordered_json(nullptr);
  if (cheapest) {
    const auto& d = rows[*cheapest].div;
    j["diversity_at_min_cost"] = {{"point_index", *cheapest},
                                  {"gd_km", number(d.gd)},
                                  {"ed", number(d.ed)},
                                  {"hhi", number(d.hhi)},
                                  {"inv_hhi", number(d.inv_hhi)}};
  } else {
    j["diversity_at_min_cost"] = nullptr;
  }
  return j;
}

}  // namespace runner_detail

/// Runs every configured scenario and writes, per scenario directory,
/// frontier.csv, weights.csv, analysis.csv (and sample_plan.csv for CVaR
/// kinds), then summary.json and manifest.json at the top of `out_dir`.
/// Configuration and input problems throw; solve failures are recorded and
/// reflected in the exit code.
inline RunResult run(const RunConfig& config_in, const std::filesystem::path& out_dir, const RunOverrides& ov = {},
                     const std::filesystem::path& config_path = {}) {
  using namespace runner_detail;
  RunConfig config = config_in;
  if (ov.seed) config.seed = *ov.seed;
  if (ov.threads) config.threads = *ov.threads;
  if (config.threads < 1) throw ConfigError("threads must be >= 1");
  for (auto& sc : config.scenarios) {
    if (ov.points) sc.n_frontier_points = *ov.points;
    sc.validate();
  }
  const auto& dc = config.data;
  for (const auto& p : {dc.plants, dc.outputs}) {
    if (!std::filesystem::exists(p)) throw ConfigError("data file not found: " + p.string());
  }
  if (dc.demand && !std::filesystem::exists(*dc.demand)) throw ConfigError("data file not found: " + dc.demand->string());
  if (dc.sample_plan && !std::filesystem::exists(*dc.sample_plan)) {
    throw ConfigError("data file not found: " + dc.sample_plan->string());
  }

  const auto t_start = std::chrono::steady_clock::now();
  Dataset ds = load_dataset(dc.plants.string(), dc.outputs.string(),
                            dc.demand ? std::optional<std::string>(dc.demand->string()) : std::nullopt,
                            dc.detrend_window_days);
  const std::size_t n_loaded = ds.plants.size();
  ModelData data;
  data.plants = prune_correlated(ds.plants, dc.correlation_threshold);
  data.demand = ds.demand;
  data.peak_mw = dc.peak_mw;
  std::optional<SamplePlan> fixed_plan;
  if (dc.sample_plan) fixed_plan = read_plan(dc.sample_plan->string());

  std::filesystem::create_directories(out_dir);
  RunResult result;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();

  for (const auto& sc : config.scenarios) {
    ScenarioResult sr;
    sr.name = sc.name;
    sr.kind = sc.kind;
    const std::filesystem::path dir = out_dir / sc.name;
    std::filesystem::create_directories(dir);
    ModelData md = data;
    if (is_cvar(sc.kind)) {
      md.plan = fixed_plan ? *fixed_plan : lhs_sample(ds.timestamps, sc.samples, config.seed, sc.strata);
      auto f = open_out(dir / "sample_plan.csv");
      write_plan(f, *md.plan);
      sr.outputs.push_back(sc.name + "/sample_plan.csv");
    }
    Frontier fr;
    try {
      fr = frontier_sweep(sc, md, config.threads);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      sr.error = e.what();
      sr.failures = static_cast<std::size_t>(sc.n_frontier_points);
      result.exit_code = exit_solve_failure;
      summary[sc.name] = {{"kind", to_string(sc.kind)}, {"error", sr.error}};
      result.scenarios.push_back(std::move(sr));
      continue;
    }
    const std::vector<double> load = scenario_load_mw(sc, md);
    const auto rows = analyze_frontier(fr, md.plants, load, scenario_lcoe(sc, md.plants), sc.beta, sc.omega);
    {
      auto f = open_out(dir / "frontier.csv");
      write_frontier_csv(f, fr);
    }
    {
      auto f = open_out(dir / "weights.csv");
      write_weights_csv(f, fr);
    }
    {
      auto f = open_out(dir / "analysis.csv");
      write_analysis_csv(f, rows);
    }
    for (const char* name : {"frontier.csv", "weights.csv", "analysis.csv"}) sr.outputs.push_back(sc.name + "/" + name);
    sr.n_points = fr.points.size();
    sr.failures = fr.failures();
    for (const auto& p : fr.points) sr.solve_seconds.push_back(p.seconds);
    if (sr.failures) result.exit_code = exit_solve_failure;
    summary[sc.name] = summarize(fr, rows);
    result.scenarios.push_back(std::move(sr));
  }

  {
    auto f = open_out(out_dir / "summary.json");
    f << summary.dump(2) << '\n';
  }

  nlohmann::ordered_json manifest;
  manifest["seed"] = config.seed;
  manifest["threads"] = config.threads;
  manifest["plants_loaded"] = n_loaded;
  manifest["plants"] = nlohmann::ordered_json::array();
  for (const auto& p : data.plants) manifest["plants"].push_back(p.id);
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  if (!config_path.empty()) inputs[config_path.string()] = sha256_file(config_path);
  inputs[dc.plants.string()] = sha256_file(dc.plants);
  inputs[dc.outputs.string()] = sha256_file(dc.outputs);
  if (dc.demand) inputs[dc.demand->string()] = sha256_file(*dc.demand);
  if (dc.sample_plan) inputs[dc.sample_plan->string()] = sha256_file(*dc.sample_plan);
  manifest["inputs"] = inputs;
  manifest["scenarios"] = nlohmann::ordered_json::array();
  for (const auto& sr : result.scenarios) {
    nlohmann::ordered_json s;
    s["name"] = sr.name;
    s["kind"] = to_string(sr.kind);
    s["n_points"] = sr.n_points;
    s["failures"] = sr.failures;
    if (!sr.error.empty()) s["error"] = sr.error;
    s["outputs"] = sr.outputs;
    s["solve_seconds"] = sr.solve_seconds;
    manifest["scenarios"].push_back(s);
  }
  manifest["outputs"] = nlohmann::ordered_json::array({"summary.json"});
  for (const auto& sr : result.scenarios) {
    for (const auto& o : sr.outputs) manifest["outputs"].push_back(o);
  }
  manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  manifest["exit_code"] = result.exit_code;
  {
    auto f = open_out(out_dir / "manifest.json");
    f << manifest.dump(2) << '\n';
  }
  return result;
}

/// Concatenates the frontier rows of several runs over the same plants.
inline void compare(const std::vector<std::filesystem::path>& run_dirs, std::ostream& out) {
  if (run_dirs.size() < 2) throw ConfigError("compare needs at least two run directories");
  std::optional<std::vector<std::string>> universe;
  struct Run {
    std::filesystem::path dir;
    std::vector<std::string> scenarios;
  };
  std::vector<Run> runs;
  for (const auto& dir : run_dirs) {
    std::ifstream f(dir / "manifest.json");
    if (!f) throw ConfigError(dir.string() + ": no manifest.json (not a completed run)");
    nlohmann::json m;
    try {
      m = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(dir.string() + "/manifest.json: " + e.what());
    }
    auto plants = m.at("plants").get<std::vector<std::string>>();
    std::sort(plants.begin(), plants.end());
    if (universe && *universe != plants) throw ConfigError(dir.string() + ": plant universe differs from " + run_dirs[0].string());
    universe = plants;
    Run r{dir, {}};
    for (const auto& s : m.at("scenarios")) {
      if (!s.contains("error")) r.scenarios.push_back(s.at("name").get<std::string>());
    }
    runs.push_back(std::move(r));
  }
  out << "run,scenario,point_index,sigma_cap,achieved_sd_per_cap,cf,cost_per_mwh,installed_mw,mean_output_mw,status\n";
  for (const auto& r : runs) {
    for (const auto& name : r.scenarios) {
      const CsvTable t = read_csv((r.dir / name / "frontier.csv").string());
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        out << r.dir.string() << ',' << name << ',' << i;
        for (const auto& cell : t.rows[i]) out << ',' << cell;
        out << '\n';
      }
    }
  }
}

}  // namespace vresport
