#pragma once

// Minimal CSV reading/writing and ISO-8601 hour stamps. Fields are plain
// comma-separated tokens; quoting is not supported because none of the
// formats this library exchanges need it.

#include <charconv>
#include <cstdio>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vresport/errors.hpp"

namespace vresport {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;  // lines starting with '#', without the '#'
};

namespace csv_detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace csv_detail

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    const auto view = csv_detail::trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      table.comments.emplace_back(csv_detail::trim(view.substr(1)));
      continue;
    }
    if (!have_header) {
      table.header = csv_detail::split(view);
      have_header = true;
      continue;
    }
    auto fields = csv_detail::split(view);
    if (fields.size() != table.header.size()) {
      throw DatasetError(path + ": row " + std::to_string(table.rows.size() + 1) + " has " +
                         std::to_string(fields.size()) + " fields, header has " +
                         std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw DatasetError(path + ": empty file");
  return table;
}

inline double parse_double(std::string_view text, std::string_view context = {}) {
  text = csv_detail::trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ValidationError("cannot parse number '" + std::string(text) + "'" +
                          (context.empty() ? std::string{} : " in " + std::string(context)));
  }
  return value;
}

// Shortest round-trip representation; keeps written CSVs byte-stable.
inline std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

/// One hourly time step on the proleptic Gregorian calendar (UTC, no zone math).
struct HourStamp {
  int year = 1970;
  unsigned month = 1;  // 1..12
  unsigned day = 1;
  unsigned hour = 0;   // 0..23

  /// Hours since 1970-01-01T00.
  std::int64_t ordinal() const {
    using namespace std::chrono;
    const sys_days d = std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day};
    return static_cast<std::int64_t>(d.time_since_epoch().count()) * 24 + hour;
  }

  static HourStamp from_ordinal(std::int64_t hours) {
    using namespace std::chrono;
    std::int64_t days = hours >= 0 ? hours / 24 : -((-hours + 23) / 24);
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    HourStamp s;
    s.year = static_cast<int>(ymd.year());
    s.month = static_cast<unsigned>(ymd.month());
    s.day = static_cast<unsigned>(ymd.day());
    s.hour = static_cast<unsigned>(hours - days * 24);
    return s;
  }

  std::string to_string() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02u:00", year, month, day, hour);
    return buf;
  }

  friend bool operator==(const HourStamp&, const HourStamp&) = default;
};

/// Accepts `YYYY-MM-DDTHH[:MM[:SS]][Z]` with 'T' or ' ' as separator. Minutes
/// and seconds must be zero.
inline HourStamp parse_timestamp(std::string_view text) {
  text = csv_detail::trim(text);
  auto fail = [&] { return ValidationError("bad hourly timestamp '" + std::string(text) + "'"); };
  auto num = [&](std::size_t pos, std::size_t len) {
    if (pos + len > text.size()) throw fail();
    int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, v);
    if (ec != std::errc{} || ptr != text.data() + pos + len) throw fail();
    return v;
  };
  if (text.size() < 13 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ')) throw fail();
  HourStamp s;
  s.year = num(0, 4);
  s.month = static_cast<unsigned>(num(5, 2));
  s.day = static_cast<unsigned>(num(8, 2));
  s.hour = static_cast<unsigned>(num(11, 2));
  std::size_t pos = 13;
  for (int field = 0; field < 2 && pos < text.size() && text[pos] == ':'; ++field, pos += 3) {
    if (num(pos + 1, 2) != 0) throw fail();
  }
  if (pos < text.size() && text[pos] == 'Z') ++pos;
  if (pos != text.size()) throw fail();
  const std::chrono::year_month_day ymd{std::chrono::year{s.year}, std::chrono::month{s.month},
                                        std::chrono::day{s.day}};
  if (!ymd.ok() || s.hour > 23) throw fail();
  return s;
}

}  // namespace vresport
