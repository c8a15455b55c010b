// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "genius/error.hpp"
#include "genius/space.hpp"

namespace genius {

enum class Metric { Val, Test };

inline std::string_view to_string(Metric m) { return m == Metric::Val ? "val" : "test"; }

struct Metrics {
  double val_acc = 0.0;
  std::optional<double> test_acc;
  std::optional<double> flops_m;
  std::optional<double> params_m;

  // Benchmarks that ship a single accuracy report it for both metrics.
  double get(Metric m) const { return (m == Metric::Test && test_acc) ? *test_acc : val_acc; }
  bool operator==(const Metrics&) const = default;
};

class BenchmarkTable {
 public:
  BenchmarkTable(SearchSpace space, std::string provenance, std::map<std::string, Metrics> entries)
      : space_(std::move(space)), provenance_(std::move(provenance)), entries_(std::move(entries)) {
    const auto card = space_cardinality(space_);
    if (entries_.size() > card.raw) throw Error("more entries than architectures in the space");
    for (const auto& [key, m] : entries_) {
      parse_key(space_, key);
      check_acc(m.val_acc, key);
      if (m.test_acc) check_acc(*m.test_acc, key);
      sorted_val_.push_back(m.val_acc);
      sorted_test_.push_back(m.get(Metric::Test));
    }
    std::sort(sorted_val_.begin(), sorted_val_.end());
    std::sort(sorted_test_.begin(), sorted_test_.end());
  }

  const SearchSpace& space() const { return space_; }
  const std::string& provenance() const { return provenance_; }
  const std::map<std::string, Metrics>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(const std::string& key) const { return entries_.count(key) != 0; }

  const Metrics& lookup(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw UnknownArchitecture(key);
    return it->second;
  }
  const Metrics& lookup(const Architecture& arch) const { return lookup(canonical_key(space_, arch)); }

  // 1 + number of entries strictly better. Ties share the better rank.
  std::size_t rank_of(double accuracy, Metric metric) const {
    const auto& v = metric == Metric::Val ? sorted_val_ : sorted_test_;
    return 1 + static_cast<std::size_t>(v.end() - std::upper_bound(v.begin(), v.end(), accuracy));
  }

  // Best entry; ties go to the lexicographically smallest key.
  std::pair<std::string, Metrics> optimum(Metric metric) const {
    if (entries_.empty()) throw Error("optimum of an empty benchmark");
    auto best = entries_.begin();
    for (auto it = std::next(entries_.begin()); it != entries_.end(); ++it) {
      if (it->second.get(metric) > best->second.get(metric)) best = it;
    }
    return *best;
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> k;
    k.reserve(entries_.size());
    for (const auto& e : entries_) k.push_back(e.first);
    return k;
  }

 private:
  static void check_acc(double a, const std::string& key) {
    if (!(a >= 0.0 && a <= 100.0)) {
      throw Error("accuracy " + std::to_string(a) + " of '" + key + "' outside [0, 100]");
    }
  }

  SearchSpace space_;
  std::string provenance_;
  std::map<std::string, Metrics> entries_;
  std::vector<double> sorted_val_;
  std::vector<double> sorted_test_;
};

// ---------------------------------------------------------------------------
// JSONL format
//
//   {"space": "nas-bench-macro", "provenance": "...", "count": 6561}
//   {"key": "00000000", "val_acc": 91.2, "test_acc": null, "flops_m": null, "params_m": null}
//   ...
//
// Channel-width benches may add "base_model" and "widths" (7 arrays of 4) to the
// header; without "widths" they are inferred from the keys.

namespace detail {

inline std::optional<double> opt_number(const nlohmann::json& j, const char* field, std::size_t line) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw FormatError(line, std::string("'") + field + "' must be a number or null");
  return it->get<double>();
}

inline SearchSpace infer_channel_space(const std::vector<std::pair<std::size_t, std::string>>& keys,
                                       std::string base_model) {
  std::vector<std::set<int>> widths;
  for (const auto& [line, key] : keys) {
    auto toks = split(key, ',');
    if (widths.empty()) widths.resize(toks.size());
    if (toks.size() != widths.size()) {
      throw KeyParseError(KeyParseError(key, std::min(toks.size(), widths.size()), "wrong layer count"), line);
    }
    for (std::size_t i = 0; i < toks.size(); ++i) {
      try {
        std::size_t used = 0;
        int w = std::stoi(toks[i], &used);
        if (used != toks[i].size()) throw std::invalid_argument("trailing");
        widths[i].insert(w);
      } catch (const std::exception&) {
        throw KeyParseError(KeyParseError(key, i, "not an integer width"), line);
      }
    }
  }
  std::vector<std::vector<int>> w;
  for (const auto& s : widths) w.emplace_back(s.begin(), s.end());
  return SearchSpace::channel_widths(std::move(w), std::move(base_model));
}

}  // namespace detail

inline BenchmarkTable parse_benchmark(std::istream& in) {
  std::string text;
  std::size_t line_no = 0;
  std::optional<nlohmann::json> header;
  std::vector<std::pair<std::size_t, nlohmann::json>> rows;
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw FormatError(line_no, "expected a JSON object");
    if (!header) {
      if (!j.contains("space") || !j["space"].is_string()) {
        throw FormatError(line_no, "header line with \"space\" required first");
      }
      if (!j.contains("count") || !j["count"].is_number_integer()) {
        throw FormatError(line_no, "header needs integer \"count\"");
      }
      header = std::move(j);
      continue;
    }
    rows.emplace_back(line_no, std::move(j));
  }
  if (!header) throw FormatError(line_no + 1, "missing header line");

  const auto& h = *header;
  auto kind = space_kind_from_string(h["space"].get<std::string>());
  if (!kind) throw FormatError(1, "unknown space '" + h["space"].get<std::string>() + "'");
  const std::string provenance = h.value("provenance", std::string{});
  const auto count = h["count"].get<std::int64_t>();

  std::vector<std::pair<std::size_t, std::string>> keys;
  for (const auto& [ln, j] : rows) {
    if (!j.contains("key") || !j["key"].is_string()) throw FormatError(ln, "missing string \"key\"");
    keys.emplace_back(ln, j["key"].get<std::string>());
  }

  std::optional<SearchSpace> space;
  try {
    if (*kind == SpaceKind::ChannelWidths) {
      const std::string base = h.value("base_model", std::string{});
      if (h.contains("widths")) {
        space = SearchSpace::channel_widths(h["widths"].get<std::vector<std::vector<int>>>(), base);
      } else {
        space = detail::infer_channel_space(keys, base);
      }
    } else {
      space = SearchSpace::of_kind(*kind);
    }
  } catch (const KeyParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(1, std::string("cannot build search space: ") + e.what());
  }

  std::map<std::string, Metrics> entries;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& [ln, j] = rows[r];
    const auto& key = keys[r].second;
    try {
      const auto arch = parse_key(*space, key);
      if (canonical_key(*space, arch) != key) throw KeyParseError(key, 0, "not in canonical form");
    } catch (const KeyParseError& e) {
      throw KeyParseError(e, ln);
    }
    Metrics m;
    auto val = detail::opt_number(j, "val_acc", ln);
    if (!val) throw FormatError(ln, "\"val_acc\" required");
    m.val_acc = *val;
    m.test_acc = detail::opt_number(j, "test_acc", ln);
    m.flops_m = detail::opt_number(j, "flops_m", ln);
    m.params_m = detail::opt_number(j, "params_m", ln);
    for (double a : {m.val_acc, m.test_acc.value_or(0.0)}) {
      if (!(a >= 0.0 && a <= 100.0)) throw FormatError(ln, "accuracy outside [0, 100]");
    }
    if (!entries.emplace(key, m).second) throw DuplicateKey(ln, key);
  }
  if (static_cast<std::int64_t>(entries.size()) != count) {
    throw FormatError(line_no + 1, "header count " + std::to_string(count) + " but " +
                                       std::to_string(entries.size()) + " entries (truncated file?)");
  }
  try {
    return BenchmarkTable(std::move(*space), provenance, std::move(entries));
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(1, e.what());
  }
}

inline BenchmarkTable load_benchmark(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open benchmark '" + path + "'");
  return parse_benchmark(in);
}

// Canonical serialization: header, then entries in key order.
inline std::string to_jsonl(const BenchmarkTable& table) {
  std::string out;
  nlohmann::ordered_json h;
  h["space"] = std::string(to_string(table.space().kind()));
  h["provenance"] = table.provenance();
  h["count"] = table.size();
  if (table.space().kind() == SpaceKind::ChannelWidths) {
    h["base_model"] = table.space().base_model();
    auto widths = nlohmann::ordered_json::array();
    for (const auto& p : table.space().positions()) {
      auto w = nlohmann::ordered_json::array();
      for (const auto& c : p.candidates) w.push_back(c.width);
      widths.push_back(std::move(w));
    }
    h["widths"] = std::move(widths);
  }
  out += h.dump() + "\n";
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  for (const auto& [key, m] : table.entries()) {
    nlohmann::ordered_json j;
    j["key"] = key;
    j["val_acc"] = m.val_acc;
    j["test_acc"] = opt(m.test_acc);
    j["flops_m"] = opt(m.flops_m);
    j["params_m"] = opt(m.params_m);
    out += j.dump() + "\n";
  }
  return out;
}

inline void save_benchmark(const BenchmarkTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << to_jsonl(table);
  if (!out) throw IoError("write failed for '" + path + "'");
}

struct BenchStats {
  std::size_t count = 0;
  double min = 0, max = 0, mean = 0;
  std::string optimum_key;
};

inline BenchStats bench_stats(const BenchmarkTable& table, Metric metric) {
  BenchStats s;
  s.count = table.size();
  if (table.empty()) return s;
  s.min = 101.0;
  s.max = -1.0;
  double sum = 0;
  for (const auto& [k, m] : table.entries()) {
    const double a = m.get(metric);
    s.min = std::min(s.min, a);
    s.max = std::max(s.max, a);
    sum += a;
  }
  s.mean = sum / static_cast<double>(table.size());
  s.optimum_key = table.optimum(metric).first;
  return s;
}

// ---------------------------------------------------------------------------
// Synthetic benchmarks

// accuracy = base + sum of per-position choice bonuses + uniform noise in
// [-noise, noise], rounded to 2 decimals. The best choice at each position is
// lifted `margin` above the runner-up, and margin > 2 * noise + 0.01, so the
// bonus-maximizing architecture is the strict optimum.
struct SynthModel {
  double base = 80.0;
  double bonus_scale = 1.5;
  double noise = 0.2;
  double margin = 0.5;
  // Emit a test accuracy = val + test_offset + independent noise.
  bool with_test = false;
  double test_offset = 2.5;
};

struct SynthBenchmark {
  BenchmarkTable table;
  std::vector<std::vector<double>> bonuses;  // [position][choice]
  Architecture best;
};

inline SynthBenchmark synth_benchmark(const SearchSpace& space, std::uint64_t seed,
                                      const SynthModel& model = {}) {
  if (model.margin <= 2 * model.noise + 0.01) throw Error("synthetic margin too small for the noise");
  Enumeration all(space);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> bonuses;
  Architecture best{space.kind(), {}};
  for (std::size_t i = 0; i < space.size(); ++i) {
    std::vector<double> b(space.candidates(i));
    for (auto& x : b) x = model.bonus_scale * unit(rng);
    const auto top = static_cast<std::size_t>(std::max_element(b.begin(), b.end()) - b.begin());
    double runner = 0.0;
    for (std::size_t c = 0; c < b.size(); ++c) {
      if (c != top) runner = std::max(runner, b[c]);
    }
    b[top] = runner + model.margin;
    best.choices.push_back(static_cast<int>(top));
    bonuses.push_back(std::move(b));
  }
  auto round2 = [](double x) { return std::round(std::clamp(x, 0.0, 100.0) * 100.0) / 100.0; };
  std::uniform_real_distribution<double> noise(-model.noise, model.noise);
  std::map<std::string, Metrics> entries;
  for (const auto& arch : all) {
    double acc = model.base;
    for (std::size_t i = 0; i < arch.choices.size(); ++i) acc += bonuses[i][static_cast<std::size_t>(arch.choices[i])];
    Metrics m;
    m.val_acc = round2(acc + noise(rng));
    if (model.with_test) m.test_acc = round2(acc + model.test_offset + noise(rng));
    entries.emplace(canonical_key(space, arch), m);
  }
  std::ostringstream prov;
  prov << "synthetic seed=" << seed << " base=" << model.base << " bonus_scale=" << model.bonus_scale
       << " noise=" << model.noise << " margin=" << model.margin;
  return {BenchmarkTable(space, prov.str(), std::move(entries)), std::move(bonuses), best};
}

}  // namespace genius
