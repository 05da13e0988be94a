#include <gtest/gtest.h>
#include <sys/wait.h>

#include <json.hpp>

#include "test_util.hpp"
#include "vresport/config.hpp"
#include "vresport/runner.hpp"

using namespace vresport;
using testutil::TempDir;
namespace fs = std::filesystem;

namespace {

const fs::path kData = VRESPORT_DATA_DIR;

struct CliResult {
  int code = -1;
  std::string err;
};

CliResult cli(const std::string& args, const fs::path& scratch) {
  const auto err_file = scratch / "stderr.txt";
  const std::string cmd = std::string("\"") + VRESPORT_CLI + "\" " + args + " >\"" + (scratch / "stdout.txt").string() +
                          "\" 2>\"" + err_file.string() + "\"";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = testutil::read_file(err_file);
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// Every regular file under `dir` except the manifest (which records timings).
std::map<std::string, std::string> outputs_of(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    out[fs::relative(e.path(), dir).string()] = testutil::read_file(e.path());
  }
  return out;
}

std::string config_with(const std::string& extra) {
  const auto d = kData / "fixture3";
  return "[data]\nplants = \"" + (d / "plants.csv").string() + "\"\noutputs = \"" + (d / "outputs.csv").string() +
         "\"\ndemand = \"" + (d / "demand.csv").string() + "\"\n" + extra;
}

}  // namespace

TEST(Cli, SmokeRunOnThreePlantFixture) {
  TempDir dir("cli");
  const auto out = dir / "run";
  const auto r = cli("run --config " + q(kData / "fixture3" / "cost_flat.toml") + " --out " + q(out), dir.path());
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"Cost_Flat/frontier.csv", "Cost_Flat/weights.csv", "Cost_Flat/analysis.csv", "summary.json",
                        "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const auto summary = nlohmann::json::parse(testutil::read_file(out / "summary.json"));
  ASSERT_TRUE(summary.contains("Cost_Flat"));
  const auto& s = summary["Cost_Flat"];
  EXPECT_EQ(s["n_points"], 21);
  for (const char* key : {"sigma_range", "min_cost", "min_sd", "min_cv_index", "diversity_at_min_cost"}) {
    EXPECT_TRUE(s.contains(key)) << key;
  }
  const auto manifest = nlohmann::json::parse(testutil::read_file(out / "manifest.json"));
  for (const auto& f : manifest["outputs"]) EXPECT_TRUE(fs::exists(out / f.get<std::string>())) << f;
  EXPECT_EQ(manifest["exit_code"], 0);
}

TEST(Cli, BetaOutOfRangeIsAConfigError) {
  TempDir dir("cli");
  testutil::write_file(dir / "bad.toml", config_with("[risk]\nbeta = 1.5\n[run]\nscenarios = [\"CVaR_Flat\"]\n"));
  const auto r = cli("run --config " + q(dir / "bad.toml") + " --out " + q(dir / "run"), dir.path());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("beta = 1.5"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("(0, 1)"), std::string::npos) << r.err;
}

TEST(Cli, OtherConfigErrorsExitTwo) {
  TempDir dir("cli");
  testutil::write_file(dir / "typo.toml", config_with("[sweep]\npoint = 5\n[run]\nscenarios = [\"Cost_Flat\"]\n"));
  EXPECT_EQ(cli("run --config " + q(dir / "typo.toml") + " --out " + q(dir / "a"), dir.path()).code, 2);
  testutil::write_file(dir / "kind.toml", config_with("[run]\nscenarios = [\"Cost_Median\"]\n"));
  EXPECT_EQ(cli("run --config " + q(dir / "kind.toml") + " --out " + q(dir / "b"), dir.path()).code, 2);
  testutil::write_file(dir / "missing.toml",
                       "[data]\nplants = \"nope.csv\"\noutputs = \"nope.csv\"\n[run]\nscenarios = [\"Cost_Flat\"]\n");
  EXPECT_EQ(cli("run --config " + q(dir / "missing.toml") + " --out " + q(dir / "c"), dir.path()).code, 2);
  EXPECT_EQ(cli("run --config " + q(dir / "absent.toml") + " --out " + q(dir / "d"), dir.path()).code, 2);
  EXPECT_EQ(cli("", dir.path()).code, 2);
  EXPECT_EQ(cli("run --out x", dir.path()).code, 2);
}

TEST(Cli, AllSevenKindsGetTheirOwnDirectory) {
  TempDir dir("cli");
  const auto out = dir / "run";
  const auto r = cli("run --config " + q(kData / "fixture6" / "all_kinds.toml") + " --out " + q(out) + " --points 5",
                     dir.path());
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* k : {"Trad_Flat", "Trad_Obs", "Cost_Flat", "Cost_Obs", "Cost_Flat_lcpv", "CVaR_Flat", "CVaR_Obs"}) {
    for (const char* f : {"frontier.csv", "weights.csv", "analysis.csv"}) EXPECT_TRUE(fs::exists(out / k / f)) << k << f;
    const auto frontier = testutil::read_file(out / k / "frontier.csv");
    EXPECT_EQ(std::count(frontier.begin(), frontier.end(), '\n'), 6) << k;
  }
  EXPECT_TRUE(fs::exists(out / "CVaR_Obs" / "sample_plan.csv"));
}

TEST(Cli, RunsAreByteIdenticalAcrossRepeatsAndThreadCounts) {
  TempDir dir("cli");
  const auto cfg = q(kData / "fixture6" / "all_kinds.toml");
  ASSERT_EQ(cli("run --config " + cfg + " --out " + q(dir / "a") + " --points 7 --threads 1", dir.path()).code, 0);
  ASSERT_EQ(cli("run --config " + cfg + " --out " + q(dir / "b") + " --points 7 --threads 1", dir.path()).code, 0);
  ASSERT_EQ(cli("run --config " + cfg + " --out " + q(dir / "c") + " --points 7 --threads 8", dir.path()).code, 0);
  const auto a = outputs_of(dir / "a");
  EXPECT_EQ(a.size(), 7u * 3 + 2 + 1);
  EXPECT_TRUE(a == outputs_of(dir / "b"));
  EXPECT_TRUE(a == outputs_of(dir / "c"));
}

TEST(Cli, SeedChangesOnlyTheSampledScenarios) {
  TempDir dir("cli");
  const auto cfg = q(kData / "fixture6" / "all_kinds.toml");
  ASSERT_EQ(cli("run --config " + cfg + " --out " + q(dir / "a") + " --points 3", dir.path()).code, 0);
  ASSERT_EQ(cli("run --config " + cfg + " --out " + q(dir / "b") + " --points 3 --seed 7", dir.path()).code, 0);
  const auto a = outputs_of(dir / "a"), b = outputs_of(dir / "b");
  EXPECT_EQ(a.at("Cost_Obs/frontier.csv"), b.at("Cost_Obs/frontier.csv"));
  EXPECT_NE(a.at("CVaR_Obs/sample_plan.csv"), b.at("CVaR_Obs/sample_plan.csv"));
}

TEST(Cli, CompareWithItselfDuplicatesRows) {
  TempDir dir("cli");
  const auto out = dir / "run";
  ASSERT_EQ(cli("run --config " + q(kData / "fixture3" / "cost_flat.toml") + " --out " + q(out), dir.path()).code, 0);
  const auto r = cli("compare " + q(out) + " " + q(out) + " --out " + q(dir / "merged.csv"), dir.path());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = testutil::read_file(dir / "merged.csv");
  std::istringstream in(text);
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header,
            "run,scenario,point_index,sigma_cap,achieved_sd_per_cap,cf,cost_per_mwh,installed_mw,mean_output_mw,status");
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 42u);
  for (std::size_t k = 0; k < 21; ++k) EXPECT_EQ(rows[k], rows[k + 21]);
}

TEST(Cli, CompareRejectsDifferentUniverses) {
  TempDir dir("cli");
  ASSERT_EQ(cli("run --config " + q(kData / "fixture3" / "cost_flat.toml") + " --out " + q(dir / "a"), dir.path()).code,
            0);
  testutil::write_file(dir / "six.toml",
                       "[data]\nplants = \"" + (kData / "fixture6" / "plants.csv").string() + "\"\noutputs = \"" +
                           (kData / "fixture6" / "outputs.csv").string() +
                           "\"\n[sweep]\npoints = 3\n[run]\nscenarios = [\"Cost_Flat\"]\n");
  ASSERT_EQ(cli("run --config " + q(dir / "six.toml") + " --out " + q(dir / "b"), dir.path()).code, 0);
  const auto r = cli("compare " + q(dir / "a") + " " + q(dir / "b"), dir.path());
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(cli("compare " + q(dir / "a"), dir.path()).code, 2);
}

TEST(Cli, ManifestDigestsTrackInputs) {
  TempDir dir("cli");
  for (const char* f : {"plants.csv", "outputs.csv", "demand.csv", "cost_flat.toml"}) {
    fs::copy_file(kData / "fixture3" / f, dir / f);
  }
  ASSERT_EQ(cli("run --config " + q(dir / "cost_flat.toml") + " --out " + q(dir / "a") + " --points 3", dir.path()).code,
            0);
  auto text = testutil::read_file(dir / "outputs.csv");
  const auto pos = text.find("\n2") + 1;  // first data row
  const auto comma = text.find(',', pos);
  text.insert(comma + 1, "0");  // "0.xx" -> "00.xx": same value, different bytes
  testutil::write_file(dir / "outputs.csv", text);
  ASSERT_EQ(cli("run --config " + q(dir / "cost_flat.toml") + " --out " + q(dir / "b") + " --points 3", dir.path()).code,
            0);
  const auto ma = nlohmann::json::parse(testutil::read_file(dir / "a" / "manifest.json"));
  const auto mb = nlohmann::json::parse(testutil::read_file(dir / "b" / "manifest.json"));
  const auto key_of = [&](const std::string& name) {
    for (const auto& [k, v] : ma["inputs"].items()) {
      if (fs::path(k).filename() == name) return k;
    }
    return std::string();
  };
  const auto outputs_key = key_of("outputs.csv"), plants_key = key_of("plants.csv");
  ASSERT_FALSE(outputs_key.empty());
  EXPECT_NE(ma["inputs"][outputs_key], mb["inputs"][outputs_key]);
  EXPECT_EQ(ma["inputs"][plants_key], mb["inputs"][plants_key]);
  EXPECT_EQ(ma["inputs"][plants_key].get<std::string>().size(), 64u);
}

TEST(Cli, SynthWritesALoadableFixture) {
  TempDir dir("cli");
  const auto r = cli("synth --out " + q(dir / "fx") + " --wind 2 --pv 1 --hours 240 --seed 3", dir.path());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ds = load_dataset((dir / "fx" / "plants.csv").string(), (dir / "fx" / "outputs.csv").string(),
                               (dir / "fx" / "demand.csv").string());
  EXPECT_EQ(ds.plants.size(), 3u);
  EXPECT_EQ(ds.length(), 240u);
}

TEST(Sha256, KnownDigest) {
  TempDir dir("sha");
  testutil::write_file(dir / "abc.txt", "abc");
  EXPECT_EQ(sha256_file(dir / "abc.txt"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Toml, ScalarsArraysAndComments) {
  const auto doc = toml::parse(std::string(
      "top = 1  # trailing\n"
      "[a]\n"
      "s = \"x # not a comment\"\n"
      "n = -2.5e1\n"
      "b = true\n"
      "arr = [\"p\", \"q\"]\n"
      "[scenario.low_pv]\n"
      "kind = \"Cost_Flat_lcpv\"\n"));
  ASSERT_TRUE(doc.sections.count("a"));
  const auto& a = doc.sections.at("a");
  EXPECT_EQ(std::get<std::string>(std::get<toml::Scalar>(a.at("s").v)), "x # not a comment");
  EXPECT_DOUBLE_EQ(std::get<double>(std::get<toml::Scalar>(a.at("n").v)), -25.0);
  EXPECT_TRUE(std::get<bool>(std::get<toml::Scalar>(a.at("b").v)));
  EXPECT_EQ(std::get<std::vector<toml::Scalar>>(a.at("arr").v).size(), 2u);
  EXPECT_TRUE(doc.sections.count("scenario.low_pv"));
  EXPECT_TRUE(doc.sections.at("").count("top"));
}

TEST(Toml, MalformedInputIsConfigError) {
  EXPECT_THROW(toml::parse(std::string("[a\n")), ConfigError);
  EXPECT_THROW(toml::parse(std::string("[a]\nx = \"open\n")), ConfigError);
  EXPECT_THROW(toml::parse(std::string("[a]\nx = 1\nx = 2\n")), ConfigError);
  EXPECT_THROW(toml::parse(std::string("[a]\njust words\n")), ConfigError);
  EXPECT_THROW(toml::parse(std::string("[a]\nx = [1, 2\n")), ConfigError);
}

TEST(Config, SectionsApplyInOrder) {
  const auto doc = toml::parse(std::string(
      "[data]\nplants = \"p.csv\"\noutputs = \"o.csv\"\n"
      "[risk]\nbeta = 0.1\n"
      "[sweep]\npoints = 9\n"
      "[scenario.cheap_pv]\nkind = \"Cost_Flat_lcpv\"\npoints = 4\n"
      "[scenario.CVaR_Flat]\nomega = 2.5\n"
      "[run]\nseed = 5\nscenarios = [\"CVaR_Flat\", \"Trad_Obs\", \"cheap_pv\"]\n"));
  const auto rc = load_config(doc, "/base");
  EXPECT_EQ(rc.data.plants, fs::path("/base/p.csv"));
  EXPECT_EQ(rc.seed, 5u);
  ASSERT_EQ(rc.scenarios.size(), 3u);
  EXPECT_EQ(rc.scenarios[0].kind, ScenarioKind::cvar_flat);
  EXPECT_DOUBLE_EQ(rc.scenarios[0].omega, 2.5);
  EXPECT_DOUBLE_EQ(rc.scenarios[0].beta, 0.1);
  EXPECT_EQ(rc.scenarios[1].kind, ScenarioKind::trad_obs);
  EXPECT_EQ(rc.scenarios[1].n_frontier_points, 9);
  EXPECT_EQ(rc.scenarios[2].name, "cheap_pv");
  EXPECT_EQ(rc.scenarios[2].kind, ScenarioKind::cost_flat_lcpv);
  EXPECT_EQ(rc.scenarios[2].n_frontier_points, 4);
  EXPECT_DOUBLE_EQ(rc.scenarios[2].pv_multiplier(), 0.5);
}

TEST(Config, UnknownKeysAndSectionsAreRejected) {
  const std::string data = "[data]\nplants = \"p.csv\"\noutputs = \"o.csv\"\n[run]\nscenarios = [\"Cost_Flat\"]\n";
  EXPECT_NO_THROW(load_config(toml::parse(data), "."));
  EXPECT_THROW(load_config(toml::parse(data + "[weird]\nx = 1\n"), "."), ConfigError);
  EXPECT_THROW(load_config(toml::parse(data + "[risk]\nbeta_typo = 1\n"), "."), ConfigError);
  EXPECT_THROW(load_config(toml::parse(data + "[sweep]\npoints = 1\n"), "."), ConfigError);
  EXPECT_THROW(load_config(toml::parse(data + "[sweep]\npoints = \"many\"\n"), "."), ConfigError);
  EXPECT_THROW(load_config(toml::parse("[run]\nscenarios = [\"Cost_Flat\"]\n"), "."), ConfigError);
  EXPECT_THROW(load_config(toml::parse("[data]\nplants = \"p.csv\"\noutputs = \"o.csv\"\n"), "."), ConfigError);
}
