#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "vresport/csv.hpp"
#include "vresport/errors.hpp"

namespace vresport {

/// Calendar strata: year bins x month bins x hour-of-day bins.
/// `year_bins == 0` means one bin per distinct calendar year.
struct StrataSpec {
  int year_bins = 0;
  int month_bins = 12;
  int hour_bins = 4;

  friend bool operator==(const StrataSpec&, const StrataSpec&) = default;
};

/// Sorted, distinct time-step positions chosen for the sampled risk rows.
struct SamplePlan {
  std::vector<std::size_t> indices;
  std::uint64_t seed = 0;
  StrataSpec strata;
};

/// Uniform integer in [0, n) by rejection; independent of the standard
/// library's distribution implementation so plans are portable.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % n;
}

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

namespace sampling_detail {

inline std::vector<std::vector<std::size_t>> build_strata(std::span<const HourStamp> calendar, const StrataSpec& spec) {
  if (spec.year_bins < 0 || spec.month_bins < 1 || spec.month_bins > 12 || spec.hour_bins < 1 ||
      spec.hour_bins > 24) {
    throw ValidationError("invalid strata specification");
  }
  std::vector<int> years;
  for (const auto& s : calendar) years.push_back(s.year);
  std::sort(years.begin(), years.end());
  years.erase(std::unique(years.begin(), years.end()), years.end());
  const auto n_years = static_cast<int>(years.size());

  std::map<std::tuple<int, int, int>, std::vector<std::size_t>> strata;
  for (std::size_t t = 0; t < calendar.size(); ++t) {
    const auto& s = calendar[t];
    const int year_idx = static_cast<int>(std::lower_bound(years.begin(), years.end(), s.year) - years.begin());
    const int yb = spec.year_bins == 0 ? year_idx : year_idx * spec.year_bins / n_years;
    const int mb = static_cast<int>(s.month - 1) * spec.month_bins / 12;
    const int hb = static_cast<int>(s.hour) * spec.hour_bins / 24;
    strata[{yb, mb, hb}].push_back(t);
  }
  std::vector<std::vector<std::size_t>> out;
  out.reserve(strata.size());
  for (auto& [key, members] : strata) out.push_back(std::move(members));
  return out;
}

}  // namespace sampling_detail

/// Stratified selection of `m` distinct positions out of `calendar.size()`.
///
/// Every non-empty stratum receives the same count (within one); a stratum
/// smaller than its share is taken whole and the excess spread over the
/// rest. Which strata get the +1 remainder is decided by a seeded shuffle,
/// and members are drawn uniformly without replacement inside each stratum.
inline SamplePlan lhs_sample(std::span<const HourStamp> calendar, std::size_t m, std::uint64_t seed,
                             StrataSpec spec = {}) {
  const std::size_t total = calendar.size();
  if (m > total) {
    throw ValidationError("lhs_sample: M = " + std::to_string(m) + " exceeds series length " + std::to_string(total));
  }
  SamplePlan plan;
  plan.seed = seed;
  plan.strata = spec;
  if (m == 0) return plan;

  auto strata = sampling_detail::build_strata(calendar, spec);
  const std::size_t s = strata.size();

  // Water-filling: largest level L with sum(min(n_s, L)) <= m.
  auto filled = [&](std::size_t level) {
    std::size_t sum = 0;
    for (const auto& st : strata) sum += std::min(st.size(), level);
    return sum;
  };
  std::size_t lo = 0, hi = total;
  while (lo < hi) {
    const std::size_t mid = (lo + hi + 1) / 2;
    if (filled(mid) <= m) lo = mid;
    else hi = mid - 1;
  }
  const std::size_t level = lo;
  std::vector<std::size_t> counts(s);
  for (std::size_t i = 0; i < s; ++i) counts[i] = std::min(strata[i].size(), level);
  std::size_t remainder = m - filled(level);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < s; ++i) {
    if (strata[i].size() > level) open.push_back(i);
  }
  seeded_shuffle(open, rng);
  for (std::size_t k = 0; k < remainder; ++k) ++counts[open[k]];

  for (std::size_t i = 0; i < s; ++i) {
    auto& members = strata[i];
    // partial Fisher-Yates: first counts[i] entries become the draw
    for (std::size_t k = 0; k < counts[i]; ++k) {
      const auto j = k + static_cast<std::size_t>(uniform_below(rng, members.size() - k));
      std::swap(members[k], members[j]);
      plan.indices.push_back(members[k]);
    }
  }
  std::sort(plan.indices.begin(), plan.indices.end());
  return plan;
}

inline void write_plan(std::ostream& out, const SamplePlan& plan) {
  out << "# seed=" << plan.seed << " strata=" << plan.strata.year_bins << 'x' << plan.strata.month_bins << 'x'
      << plan.strata.hour_bins << '\n';
  out << "position\n";
  for (auto i : plan.indices) out << i << '\n';
}

inline SamplePlan read_plan(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header != std::vector<std::string>{"position"}) throw DatasetError(path + ": expected header 'position'");
  SamplePlan plan;
  for (const auto& c : table.comments) {
    unsigned long long seed = 0;
    int y = 0, mo = 0, h = 0;
    if (std::sscanf(c.c_str(), "seed=%llu strata=%dx%dx%d", &seed, &y, &mo, &h) == 4) {
      plan.seed = seed;
      plan.strata = {y, mo, h};
    }
  }
  for (const auto& row : table.rows) plan.indices.push_back(static_cast<std::size_t>(parse_double(row[0], path)));
  return plan;
}

}  // namespace vresport
