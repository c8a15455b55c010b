// SPDX-License-Identifier: Apache-2.0
#pragma once

// Independent oracles and fixtures shared by the unit and acceptance suites.
// Nothing here calls the code it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "genius/genius.hpp"

namespace genius::testing {

inline SearchSpace channel_space() {
  return SearchSpace::channel_widths_uniform({64, 64, 128, 128, 256, 256, 512}, "resnet");
}

// rank = 1 + number of strictly better values, by sorting.
inline std::size_t sort_rank(std::vector<double> values, double acc) {
  std::sort(values.begin(), values.end(), std::greater<>());
  std::size_t r = 1;
  for (double v : values) {
    if (v > acc) ++r;
  }
  return r;
}

// Rank of every value by one descending sort: equal values share the rank
// of their first occurrence.
inline std::map<double, std::size_t> sort_ranks(std::vector<double> values) {
  std::sort(values.begin(), values.end(), std::greater<>());
  std::map<double, std::size_t> out;
  for (std::size_t i = 0; i < values.size(); ++i) out.emplace(values[i], i + 1);
  return out;
}

// Mean of max over every ordered k-tuple drawn with replacement.
inline double brute_force_best_of_k(const std::vector<double>& values, int k) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
  long double sum = 0;
  std::size_t tuples = 0;
  while (true) {
    double best = values[idx[0]];
    for (auto i : idx) best = std::max(best, values[i]);
    sum += best;
    ++tuples;
    std::size_t p = 0;
    while (p < idx.size() && ++idx[p] == n) idx[p++] = 0;
    if (p == idx.size()) break;
  }
  return static_cast<double>(sum / static_cast<long double>(tuples));
}

// Every key of a small space by nested decimal counting, independent of
// the library enumerator.
inline std::vector<std::string> all_digit_keys(int positions, int choices) {
  std::vector<std::string> out;
  std::size_t total = 1;
  for (int i = 0; i < positions; ++i) total *= static_cast<std::size_t>(choices);
  out.reserve(total);
  for (std::size_t n = 0; n < total; ++n) {
    std::string k(static_cast<std::size_t>(positions), '0');
    std::size_t x = n;
    for (int i = positions - 1; i >= 0; --i) {
      k[static_cast<std::size_t>(i)] = static_cast<char>('0' + x % static_cast<std::size_t>(choices));
      x /= static_cast<std::size_t>(choices);
    }
    out.push_back(k);
  }
  return out;
}

inline BenchmarkTable table_from_values(const SearchSpace& space, const std::vector<std::string>& keys,
                                        const std::vector<double>& values, std::string provenance = "test") {
  std::map<std::string, Metrics> m;
  for (std::size_t i = 0; i < keys.size(); ++i) m[keys[i]] = Metrics{values[i], std::nullopt, std::nullopt, std::nullopt};
  return BenchmarkTable(space, std::move(provenance), std::move(m));
}

// Macro table where the accuracy at rank r (1-based) is fixed by anchors and
// strictly decreasing in between. Keys are assigned to ranks by a seeded
// shuffle so rank and key order are unrelated.
struct RankedTable {
  BenchmarkTable table;
  std::vector<std::string> key_at_rank;  // index r-1
};

inline RankedTable ranked_macro_table(const std::vector<std::pair<std::size_t, double>>& anchors,
                                      double floor_acc, std::uint64_t seed) {
  const auto space = SearchSpace::macro_ops();
  auto keys = all_digit_keys(8, 3);
  std::mt19937_64 rng(seed);
  std::shuffle(keys.begin(), keys.end(), rng);
  const std::size_t n = keys.size();
  auto pts = anchors;
  if (pts.back().first != n) pts.emplace_back(n, floor_acc);
  std::vector<double> v(n);
  for (std::size_t a = 0; a + 1 < pts.size(); ++a) {
    const auto [r0, v0] = pts[a];
    const auto [r1, v1] = pts[a + 1];
    for (std::size_t r = r0; r <= r1; ++r) {
      v[r - 1] = v0 + (v1 - v0) * static_cast<double>(r - r0) / static_cast<double>(r1 - r0);
    }
  }
  return {table_from_values(space, keys, v, "ranked synthetic macro"), keys};
}

// Ranks and accuracies of one replayed trial on the macro benchmark, taken
// from the published per-iteration table.
inline const std::vector<std::pair<std::size_t, double>>& replay_trial_anchors() {
  static const std::vector<std::pair<std::size_t, double>> a = {
      {1, 93.13}, {8, 93.05}, {21, 92.95}, {64, 92.82}, {212, 92.62}, {479, 92.46}, {6221, 85.70}};
  return a;
}
inline const std::vector<std::size_t>& replay_trial_ranks() {
  static const std::vector<std::size_t> r = {6221, 212, 64, 8, 21, 479};
  return r;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("genius-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Textbook MBConv MAC count written out term by term.
inline std::int64_t mbconv_oracle(int k, int e, int cin, int cout, int h, int stride) {
  const std::int64_t E = static_cast<std::int64_t>(cin) * e;
  const std::int64_t ho = (h + stride - 1) / stride;
  const std::int64_t expand = static_cast<std::int64_t>(h) * h * cin * E;
  const std::int64_t dw = ho * ho * E * k * k;
  const std::int64_t se = 2 * E * (E / 4) + E * ho * ho;
  const std::int64_t project = ho * ho * E * cout;
  return expand + dw + se + project;
}

}  // namespace genius::testing
