#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "vresport/csv.hpp"
#include "vresport/errors.hpp"
#include "vresport/models.hpp"

namespace vresport {

// The subset of TOML the run configuration needs: [section] and
// [section.sub] headers, key = value with strings, numbers, booleans and
// flat arrays of those, and # comments.
namespace toml {

using Scalar = std::variant<std::string, double, bool>;

struct Value {
  std::variant<Scalar, std::vector<Scalar>> v;
  int line = 0;
};

using Table = std::map<std::string, Value>;

struct Document {
  std::map<std::string, Table> sections;  // "" holds keys before any header
  std::vector<std::string> order;         // section names as first seen
};

namespace detail {

inline std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

inline bool bare_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

class Reader {
 public:
  Reader(std::string_view text, int line) : s_(text), line_(line) {}

  Scalar scalar() {
    skip_ws();
    if (at_end()) fail("missing value");
    if (s_[i_] == '"') return string();
    const std::size_t start = i_;
    while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != ']' && !std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    const std::string tok(s_.substr(start, i_ - start));
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string digits;
    for (char c : tok) {
      if (c != '_') digits += c;
    }
    try {
      std::size_t used = 0;
      const double d = std::stod(digits, &used);
      if (used == digits.size()) return d;
    } catch (const std::exception&) {
    }
    fail("cannot parse value '" + tok + "'");
  }

  Value value() {
    skip_ws();
    Value out;
    out.line = line_;
    if (!at_end() && s_[i_] == '[') {
      ++i_;
      std::vector<Scalar> items;
      skip_ws();
      while (!at_end() && s_[i_] != ']') {
        items.push_back(scalar());
        skip_ws();
        if (!at_end() && s_[i_] == ',') {
          ++i_;
          skip_ws();
        } else if (at_end() || s_[i_] != ']') {
          fail("expected ',' or ']' in array");
        }
      }
      if (at_end()) fail("unterminated array");
      ++i_;
      out.v = std::move(items);
    } else {
      out.v = scalar();
    }
    skip_ws();
    if (!at_end()) fail("unexpected text after value");
    return out;
  }

 private:
  std::string string() {
    ++i_;
    std::string out;
    while (i_ < s_.size() && s_[i_] != '"') {
      if (s_[i_] == '\\' && i_ + 1 < s_.size()) {
        ++i_;
        switch (s_[i_]) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          default: out += s_[i_];
        }
      } else {
        out += s_[i_];
      }
      ++i_;
    }
    if (at_end()) fail("unterminated string");
    ++i_;
    return out;
  }
  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool at_end() const { return i_ >= s_.size(); }
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("line " + std::to_string(line_) + ": " + what);
  }

  std::string_view s_;
  std::size_t i_ = 0;
  int line_;
};

}  // namespace detail

inline Document parse(std::istream& in) {
  Document doc;
  std::string current;
  doc.sections[current];
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line(csv_detail::trim(detail::strip_comment(raw)));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      }
      current = std::string(csv_detail::trim(std::string_view(line).substr(1, line.size() - 2)));
      std::stringstream parts(current);
      std::string part;
      while (std::getline(parts, part, '.')) {
        if (!detail::bare_key(part)) {
          throw ConfigError("line " + std::to_string(line_no) + ": bad section name '" + current + "'");
        }
      }
      if (doc.sections.count(current) && !doc.sections[current].empty()) {
        throw ConfigError("line " + std::to_string(line_no) + ": section [" + current + "] repeated");
      }
      doc.sections[current];
      doc.order.push_back(current);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(csv_detail::trim(std::string_view(line).substr(0, eq)));
    if (!detail::bare_key(key)) throw ConfigError("line " + std::to_string(line_no) + ": bad key '" + key + "'");
    auto& table = doc.sections[current];
    if (table.count(key)) throw ConfigError("line " + std::to_string(line_no) + ": key '" + key + "' repeated");
    table[key] = detail::Reader(std::string_view(line).substr(eq + 1), line_no).value();
  }
  return doc;
}

inline Document parse(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

}  // namespace toml

/// Typed access to one section; records which keys were read so leftovers
/// can be reported as typos.
class Section {
 public:
  Section(std::string name, const toml::Table* table) : name_(std::move(name)), table_(table) {}

  std::optional<double> number(const std::string& key) {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    const auto* s = std::get_if<toml::Scalar>(&v->v);
    const auto* d = s ? std::get_if<double>(s) : nullptr;
    if (!d) throw ConfigError(where(key, *v) + " must be a number");
    return *d;
  }
  std::optional<long long> integer(const std::string& key) {
    const auto d = number(key);
    if (!d) return std::nullopt;
    if (*d != std::floor(*d) || std::abs(*d) > 9.007e15) throw ConfigError(where(key, *find(key)) + " must be an integer");
    return static_cast<long long>(*d);
  }
  std::optional<std::string> string(const std::string& key) {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    const auto* s = std::get_if<toml::Scalar>(&v->v);
    const auto* str = s ? std::get_if<std::string>(s) : nullptr;
    if (!str) throw ConfigError(where(key, *v) + " must be a string");
    return *str;
  }
  std::optional<std::vector<std::string>> strings(const std::string& key) {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    const auto* arr = std::get_if<std::vector<toml::Scalar>>(&v->v);
    if (!arr) throw ConfigError(where(key, *v) + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& s : *arr) {
      const auto* str = std::get_if<std::string>(&s);
      if (!str) throw ConfigError(where(key, *v) + " must be an array of strings");
      out.push_back(*str);
    }
    return out;
  }

  void reject_unknown() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      if (!used_.count(k)) throw ConfigError(where(k, v) + " is not a recognised key");
    }
  }

 private:
  const toml::Value* find(const std::string& key) {
    used_.insert(key);
    if (!table_) return nullptr;
    const auto it = table_->find(key);
    return it == table_->end() ? nullptr : &it->second;
  }
  std::string where(const std::string& key, const toml::Value& v) const {
    return "line " + std::to_string(v.line) + ": " + (name_.empty() ? "" : "[" + name_ + "] ") + key;
  }

  std::string name_;
  const toml::Table* table_;
  std::set<std::string> used_;
};

struct DataConfig {
  std::filesystem::path plants;
  std::filesystem::path outputs;
  std::optional<std::filesystem::path> demand;
  std::optional<std::filesystem::path> sample_plan;  // reuse a persisted plan instead of sampling
  double correlation_threshold = 0.99;
  int detrend_window_days = 3;
  std::optional<double> peak_mw;
};

struct RunConfig {
  DataConfig data;
  std::vector<ScenarioConfig> scenarios;
  std::uint64_t seed = 42;
  int threads = 1;
};

namespace config_detail {

inline void apply_common(Section& s, ScenarioConfig& sc) {
  if (auto v = s.integer("points")) sc.n_frontier_points = static_cast<int>(*v);
  if (auto v = s.number("beta")) sc.beta = *v;
  if (auto v = s.number("omega")) sc.omega = *v;
  if (auto v = s.integer("samples")) {
    if (*v < 1) throw ConfigError("samples must be >= 1");
    sc.samples = static_cast<std::size_t>(*v);
  }
  if (auto v = s.number("discount_rate")) sc.finance.discount_rate = *v;
  if (auto v = s.integer("wind_lifetime_years")) sc.finance.wind_lifetime_years = static_cast<int>(*v);
  if (auto v = s.integer("pv_lifetime_years")) sc.finance.pv_lifetime_years = static_cast<int>(*v);
  if (auto v = s.number("pv_cost_multiplier")) sc.pv_cost_multiplier = *v;
  if (auto v = s.integer("year_bins")) sc.strata.year_bins = static_cast<int>(*v);
  if (auto v = s.integer("month_bins")) sc.strata.month_bins = static_cast<int>(*v);
  if (auto v = s.integer("hour_bins")) sc.strata.hour_bins = static_cast<int>(*v);
}

}  // namespace config_detail

/// Builds a run configuration from a parsed document. Relative data paths
/// are resolved against `base_dir`.
inline RunConfig load_config(const toml::Document& doc, const std::filesystem::path& base_dir) {
  using config_detail::apply_common;
  static const std::set<std::string> known{"", "data", "finance", "risk", "sweep", "run"};
  for (const auto& [name, table] : doc.sections) {
    if (!known.count(name) && name.rfind("scenario.", 0) != 0) throw ConfigError("unknown section [" + name + "]");
  }
  auto section = [&](const std::string& name) {
    const auto it = doc.sections.find(name);
    return Section(name, it == doc.sections.end() ? nullptr : &it->second);
  };
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };

  RunConfig rc;
  Section top = section("");
  top.reject_unknown();

  Section data = section("data");
  const auto plants = data.string("plants");
  const auto outputs = data.string("outputs");
  if (!plants || !outputs) throw ConfigError("[data] needs 'plants' and 'outputs'");
  rc.data.plants = resolve(*plants);
  rc.data.outputs = resolve(*outputs);
  if (auto d = data.string("demand")) rc.data.demand = resolve(*d);
  if (auto d = data.string("sample_plan")) rc.data.sample_plan = resolve(*d);
  if (auto v = data.number("correlation_threshold")) rc.data.correlation_threshold = *v;
  if (auto v = data.integer("detrend_window_days")) rc.data.detrend_window_days = static_cast<int>(*v);
  if (auto v = data.number("peak_mw")) rc.data.peak_mw = *v;
  data.reject_unknown();
  if (!(rc.data.correlation_threshold > 0.0 && rc.data.correlation_threshold <= 1.0)) {
    throw ConfigError("[data] correlation_threshold = " + format_double(rc.data.correlation_threshold) +
                      " outside the valid range (0, 1]");
  }
  if (rc.data.detrend_window_days < 0) throw ConfigError("[data] detrend_window_days must be >= 0");
  if (rc.data.peak_mw && !(*rc.data.peak_mw > 0.0)) throw ConfigError("[data] peak_mw must be > 0");

  // Defaults shared by every scenario.
  ScenarioConfig defaults;
  Section finance = section("finance");
  apply_common(finance, defaults);
  finance.reject_unknown();
  Section risk = section("risk");
  apply_common(risk, defaults);
  risk.reject_unknown();
  Section sweep = section("sweep");
  apply_common(sweep, defaults);
  sweep.reject_unknown();

  Section run = section("run");
  if (auto v = run.integer("seed")) {
    if (*v < 0) throw ConfigError("[run] seed must be >= 0");
    rc.seed = static_cast<std::uint64_t>(*v);
  }
  if (auto v = run.integer("threads")) rc.threads = static_cast<int>(*v);
  const auto listed = run.strings("scenarios");
  run.reject_unknown();
  if (rc.threads < 1) throw ConfigError("[run] threads must be >= 1");

  std::map<std::string, ScenarioConfig> defined;
  std::vector<std::string> defined_order;
  for (const auto& name : doc.order) {
    if (name.rfind("scenario.", 0) != 0) continue;
    Section s = section(name);
    ScenarioConfig sc = defaults;
    sc.name = name.substr(9);
    const auto kind = s.string("kind");
    sc.kind = parse_scenario_kind(kind.value_or(sc.name));
    apply_common(s, sc);
    s.reject_unknown();
    defined_order.push_back(sc.name);
    defined[sc.name] = sc;
  }
  // An explicit list selects and orders; otherwise every defined scenario runs.
  std::set<std::string> seen;
  for (const auto& entry : listed.value_or(defined_order)) {
    if (!seen.insert(entry).second) throw ConfigError("[run] scenarios lists '" + entry + "' twice");
    if (const auto it = defined.find(entry); it != defined.end()) {
      rc.scenarios.push_back(it->second);
    } else {
      ScenarioConfig sc = defaults;
      sc.name = entry;
      sc.kind = parse_scenario_kind(entry);
      rc.scenarios.push_back(sc);
    }
  }
  if (rc.scenarios.empty()) throw ConfigError("no scenarios: add [scenario.<name>] sections or [run] scenarios");
  for (const auto& sc : rc.scenarios) sc.validate();
  return rc;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return load_config(toml::parse(in), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace vresport
