// vresport: run scenario sweeps, compare runs, write synthetic fixtures.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "vresport/runner.hpp"
#include "vresport/synthetic.hpp"

namespace {

int do_run(const std::string& config_path, const std::string& out, const vresport::RunOverrides& ov) {
  const auto config = vresport::load_config(config_path);
  const auto result = vresport::run(config, out, ov, config_path);
  for (const auto& s : result.scenarios) {
    std::cout << s.name << ": ";
    if (!s.error.empty()) std::cout << "failed (" << s.error << ")\n";
    else std::cout << s.n_points << " points, " << s.failures << " not optimal\n";
  }
  return result.exit_code;
}

int do_compare(const std::vector<std::string>& dirs, const std::string& out) {
  std::vector<std::filesystem::path> paths(dirs.begin(), dirs.end());
  if (out.empty() || out == "-") {
    vresport::compare(paths, std::cout);
    return vresport::exit_ok;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw vresport::ConfigError("cannot write " + out);
  vresport::compare(paths, f);
  return vresport::exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Renewable portfolio frontiers: mean-variance, cost and CVaR models"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run the scenarios of a config file");
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> points, threads;
  run->add_option("--config", config_path, "Config file (TOML)")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Sampling seed (overrides [run] seed)");
  run->add_option("--points", points, "Frontier points per scenario")->check(CLI::Range(2, 100000));
  run->add_option("--threads", threads, "Concurrent solves")->check(CLI::Range(1, 1024));

  auto* cmp = app.add_subcommand("compare", "Merge the frontiers of completed runs into one CSV");
  std::vector<std::string> dirs;
  std::string cmp_out;
  cmp->add_option("dirs", dirs, "Run directories")->required()->expected(2, -1);
  cmp->add_option("--out", cmp_out, "Output CSV (default stdout)");

  auto* syn = app.add_subcommand("synth", "Write a synthetic plant and demand fixture");
  vresport::SyntheticSpec spec;
  std::string syn_out;
  syn->add_option("--out", syn_out, "Output directory")->required();
  syn->add_option("--wind", spec.n_wind, "Wind plants");
  syn->add_option("--pv", spec.n_pv, "PV plants");
  syn->add_option("--hours", spec.hours, "Hourly steps")->check(CLI::PositiveNumber);
  syn->add_option("--seed", spec.seed, "Generator seed");
  syn->add_option("--demand-mw", spec.demand_mean_mw, "Mean demand in MW")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : vresport::exit_config_error;
  }

  try {
    if (*run) return do_run(config_path, out_dir, {seed, points, threads});
    if (*cmp) return do_compare(dirs, cmp_out);
    if (*syn) {
      vresport::write_synthetic(syn_out, vresport::make_synthetic(spec));
      return vresport::exit_ok;
    }
  } catch (const vresport::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return vresport::exit_config_error;
  } catch (const vresport::DatasetError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return vresport::exit_config_error;
  } catch (const vresport::ValidationError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return vresport::exit_config_error;
  } catch (const vresport::GapError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return vresport::exit_config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return vresport::exit_solve_failure;
  }
  return vresport::exit_ok;
}
