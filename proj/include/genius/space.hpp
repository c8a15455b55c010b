// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "genius/error.hpp"

namespace genius {

using Rng = std::mt19937_64;
using u128 = unsigned __int128;

enum class SpaceKind { MacroOps, ChannelWidths, CellDag, MobileNetV2 };

inline std::string_view to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::MacroOps: return "nas-bench-macro";
    case SpaceKind::ChannelWidths: return "channel-bench-macro";
    case SpaceKind::CellDag: return "nas-bench-201";
    case SpaceKind::MobileNetV2: return "mobilenetv2";
  }
  return "?";
}

inline std::optional<SpaceKind> space_kind_from_string(std::string_view s) {
  for (auto k : {SpaceKind::MacroOps, SpaceKind::ChannelWidths, SpaceKind::CellDag,
                 SpaceKind::MobileNetV2}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

// One candidate at a position. Operators fill name/kernel/expansion, channel
// choices fill width.
struct Choice {
  std::string name;
  std::string description;
  int width = 0;
  int kernel = 0;
  int expansion = 0;
  bool skip = false;

  bool operator==(const Choice&) const = default;
};

struct ChoicePosition {
  std::size_t index = 0;
  std::string label;
  std::vector<Choice> candidates;

  bool operator==(const ChoicePosition&) const = default;
};

struct Architecture {
  SpaceKind kind = SpaceKind::MacroOps;
  std::vector<int> choices;

  bool operator==(const Architecture&) const = default;
};

namespace mbv2 {
inline constexpr std::size_t kStages = 5;
inline constexpr std::size_t kSlots = 6;
inline constexpr int kSkip = 6;
inline constexpr int kChoices = 7;
}  // namespace mbv2

namespace cell {
inline constexpr int kNodes = 4;
// Edges of the dense 4-node DAG, ordered by (source, target).
inline constexpr std::pair<int, int> kEdges[6] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
// NAS-Bench-201 operation names, in candidate order.
inline constexpr std::string_view kOps[5] = {"none", "skip_connect", "nor_conv_1x1",
                                             "nor_conv_3x3", "avg_pool_3x3"};
}  // namespace cell

class SearchSpace {
 public:
  // 8 layers x {Identity, MB k3 e3, MB k5 e6}.
  static SearchSpace macro_ops() {
    std::vector<ChoicePosition> pos;
    for (std::size_t i = 0; i < 8; ++i) {
      pos.push_back({i, "layer " + std::to_string(i),
                     {{"identity", "Identity (layer bypassed)", 0, 0, 0, true},
                      {"mb_k3_e3", "InvertedResidual block, kernel 3, expansion 3", 0, 3, 3, false},
                      {"mb_k5_e6", "InvertedResidual block, kernel 5, expansion 6", 0, 5, 6, false}}});
    }
    return SearchSpace(SpaceKind::MacroOps, "NAS-Bench-Macro", "", std::move(pos));
  }

  // 7 layers, each with 4 candidate widths (sorted ascending on construction).
  static SearchSpace channel_widths(std::vector<std::vector<int>> widths, std::string base_model) {
    std::vector<ChoicePosition> pos;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      auto w = widths[i];
      std::sort(w.begin(), w.end());
      ChoicePosition p{i, "layer " + std::to_string(i), {}};
      for (int c : w) {
        p.candidates.push_back(
            {std::to_string(c), std::to_string(c) + " output channels", c, 0, 0, false});
      }
      pos.push_back(std::move(p));
    }
    return SearchSpace(SpaceKind::ChannelWidths, "Channel-Bench-Macro", std::move(base_model),
                       std::move(pos));
  }

  // Uniformly spaced widths {m/4, m/2, 3m/4, m} for each layer maximum m.
  static SearchSpace channel_widths_uniform(const std::vector<int>& max_widths,
                                            std::string base_model) {
    std::vector<std::vector<int>> w;
    for (int m : max_widths) w.push_back({m / 4, m / 2, 3 * m / 4, m});
    return channel_widths(std::move(w), std::move(base_model));
  }

  static SearchSpace cell_dag() {
    std::vector<ChoicePosition> pos;
    for (std::size_t i = 0; i < 6; ++i) {
      auto [s, t] = cell::kEdges[i];
      ChoicePosition p{i, "edge " + std::to_string(s) + "->" + std::to_string(t), {}};
      const char* desc[5] = {"zero (edge removed)", "identity", "ReLU-Conv1x1-BN", "ReLU-Conv3x3-BN",
                             "3x3 average pooling"};
      for (int o = 0; o < 5; ++o) {
        p.candidates.push_back({std::string(cell::kOps[o]), desc[o], 0, 0, 0, o == 0});
      }
      pos.push_back(std::move(p));
    }
    return SearchSpace(SpaceKind::CellDag, "NAS-Bench-201", "", std::move(pos));
  }

  // 5 stages x 6 slots x {MBConv k in {3,5,7} x e in {4,6}, skip}.
  static SearchSpace mobilenet_v2() {
    std::vector<ChoicePosition> pos;
    for (std::size_t s = 0; s < mbv2::kStages; ++s) {
      for (std::size_t l = 0; l < mbv2::kSlots; ++l) {
        ChoicePosition p{s * mbv2::kSlots + l,
                         "stage " + std::to_string(s) + " slot " + std::to_string(l),
                         {}};
        for (int k : {3, 5, 7}) {
          for (int e : {4, 6}) {
            p.candidates.push_back({"mb" + std::to_string(k) + "e" + std::to_string(e),
                                    "MBConv with squeeze-excitation, kernel " + std::to_string(k) +
                                        ", expansion " + std::to_string(e),
                                    0, k, e, false});
          }
        }
        p.candidates.push_back({"skip", "Skip (layer absent)", 0, 0, 0, true});
        pos.push_back(std::move(p));
      }
    }
    return SearchSpace(SpaceKind::MobileNetV2, "MobileNetV2", "", std::move(pos));
  }

  static SearchSpace of_kind(SpaceKind kind) {
    switch (kind) {
      case SpaceKind::MacroOps: return macro_ops();
      case SpaceKind::CellDag: return cell_dag();
      case SpaceKind::MobileNetV2: return mobilenet_v2();
      case SpaceKind::ChannelWidths: break;
    }
    throw Error("channel-width spaces need explicit widths");
  }

  SpaceKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const std::string& base_model() const { return base_model_; }
  const std::vector<ChoicePosition>& positions() const { return positions_; }
  std::size_t size() const { return positions_.size(); }
  std::size_t candidates(std::size_t pos) const { return positions_[pos].candidates.size(); }

  // Token used for choice `idx` at position `pos` inside canonical keys.
  std::string token(std::size_t pos, int idx) const {
    const auto& c = positions_[pos].candidates[static_cast<std::size_t>(idx)];
    switch (kind_) {
      case SpaceKind::MacroOps:
      case SpaceKind::CellDag: return std::to_string(idx);
      case SpaceKind::ChannelWidths: return std::to_string(c.width);
      case SpaceKind::MobileNetV2: return c.name;
    }
    return {};
  }

  bool operator==(const SearchSpace&) const = default;

 private:
  SearchSpace(SpaceKind kind, std::string name, std::string base, std::vector<ChoicePosition> pos)
      : kind_(kind), name_(std::move(name)), base_model_(std::move(base)), positions_(std::move(pos)) {
    check();
  }

  void check() const {
    std::size_t want_pos = 0, want_cand = 0;
    switch (kind_) {
      case SpaceKind::MacroOps: want_pos = 8, want_cand = 3; break;
      case SpaceKind::ChannelWidths: want_pos = 7, want_cand = 4; break;
      case SpaceKind::CellDag: want_pos = 6, want_cand = 5; break;
      case SpaceKind::MobileNetV2: want_pos = 30, want_cand = 7; break;
    }
    if (positions_.size() != want_pos) {
      throw Error(std::string(to_string(kind_)) + " space needs " + std::to_string(want_pos) +
                  " positions, got " + std::to_string(positions_.size()));
    }
    for (const auto& p : positions_) {
      if (p.candidates.size() != want_cand) {
        throw Error(std::string(to_string(kind_)) + " position " + std::to_string(p.index) +
                    " needs " + std::to_string(want_cand) + " candidates, got " +
                    std::to_string(p.candidates.size()));
      }
    }
    if (kind_ == SpaceKind::ChannelWidths) {
      for (const auto& p : positions_) {
        for (std::size_t i = 0; i < p.candidates.size(); ++i) {
          if (p.candidates[i].width <= 0) throw Error("channel widths must be positive");
          if (i > 0 && p.candidates[i].width == p.candidates[i - 1].width) {
            throw Error("duplicate width at layer " + std::to_string(p.index));
          }
        }
      }
    }
  }

  SpaceKind kind_;
  std::string name_;
  std::string base_model_;
  std::vector<ChoicePosition> positions_;
};

// ---------------------------------------------------------------------------
// Cardinality

inline std::string to_decimal(u128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return {s.rbegin(), s.rend()};
}

struct Cardinality {
  // Product of candidate counts.
  u128 raw = 0;
  // Set when canonical forms are fewer than raw (MobileNetV2 Skip ordering).
  std::optional<u128> canonical;

  bool canonical_smaller() const { return canonical.has_value(); }
  std::string str() const { return to_decimal(raw); }
};

inline Cardinality space_cardinality(const SearchSpace& space) {
  Cardinality c;
  c.raw = 1;
  for (const auto& p : space.positions()) c.raw *= p.candidates.size();
  if (space.kind() == SpaceKind::MobileNetV2) {
    // Per stage, d active layers from 6 operators then 6-d skips.
    u128 per_stage = 0, pw = 1;
    for (std::size_t d = 0; d <= mbv2::kSlots; ++d) {
      per_stage += pw;
      pw *= static_cast<u128>(mbv2::kChoices - 1);
    }
    u128 total = 1;
    for (std::size_t s = 0; s < mbv2::kStages; ++s) total *= per_stage;
    c.canonical = total;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Validation

inline std::vector<std::string> validate(const SearchSpace& space, const Architecture& arch) {
  std::vector<std::string> v;
  if (arch.kind != space.kind()) {
    v.push_back("kind " + std::string(to_string(arch.kind)) + " != " +
                std::string(to_string(space.kind())));
  }
  if (arch.choices.size() != space.size()) {
    v.push_back("length " + std::to_string(arch.choices.size()) + " != " +
                std::to_string(space.size()));
  }
  const std::size_t n = std::min(arch.choices.size(), space.size());
  for (std::size_t i = 0; i < n; ++i) {
    const int c = arch.choices[i];
    if (c < 0 || static_cast<std::size_t>(c) >= space.candidates(i)) {
      v.push_back("index " + std::to_string(c) + " out of range at position " + std::to_string(i) +
                  " (" + std::to_string(space.candidates(i)) + " candidates)");
    }
  }
  if (space.kind() == SpaceKind::MobileNetV2 && arch.choices.size() == space.size()) {
    for (std::size_t s = 0; s < mbv2::kStages; ++s) {
      bool seen_skip = false;
      for (std::size_t l = 0; l < mbv2::kSlots; ++l) {
        const bool skip = arch.choices[s * mbv2::kSlots + l] == mbv2::kSkip;
        if (skip) {
          seen_skip = true;
        } else if (seen_skip) {
          v.push_back("Skip precedes active layer in stage " + std::to_string(s));
          break;
        }
      }
    }
  }
  return v;
}

inline bool is_valid(const SearchSpace& space, const Architecture& arch) {
  return validate(space, arch).empty();
}

inline void require_valid(const SearchSpace& space, const Architecture& arch) {
  auto v = validate(space, arch);
  if (!v.empty()) {
    std::string msg = "invalid architecture:";
    for (const auto& s : v) msg += " " + s + ";";
    throw InvalidArchitecture(msg);
  }
}

// Moves Skip slots of each MobileNetV2 stage behind the active layers,
// keeping the active layers' relative order. Other spaces pass through.
inline Architecture normalize(const SearchSpace& space, Architecture arch) {
  if (space.kind() != SpaceKind::MobileNetV2 || arch.choices.size() != space.size()) return arch;
  for (std::size_t s = 0; s < mbv2::kStages; ++s) {
    auto first = arch.choices.begin() + static_cast<std::ptrdiff_t>(s * mbv2::kSlots);
    std::stable_partition(first, first + mbv2::kSlots, [](int c) { return c != mbv2::kSkip; });
  }
  return arch;
}

// ---------------------------------------------------------------------------
// Keys

inline std::string canonical_key(const SearchSpace& space, const Architecture& arch) {
  require_valid(space, arch);
  std::string key;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (i > 0) {
      if (space.kind() == SpaceKind::ChannelWidths) {
        key += ',';
      } else if (space.kind() == SpaceKind::MobileNetV2) {
        key += (i % mbv2::kSlots == 0) ? '|' : ',';
      }
    }
    key += space.token(i, arch.choices[i]);
  }
  return key;
}

namespace detail {
inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto p = s.find(sep, start);
    out.emplace_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}
}  // namespace detail

inline Architecture parse_key(const SearchSpace& space, std::string_view key) {
  const std::string k(key);
  Architecture arch{space.kind(), {}};
  std::vector<std::string> tokens;
  switch (space.kind()) {
    case SpaceKind::MacroOps:
    case SpaceKind::CellDag:
      for (char c : key) tokens.emplace_back(1, c);
      break;
    case SpaceKind::ChannelWidths:
      tokens = detail::split(key, ',');
      break;
    case SpaceKind::MobileNetV2: {
      auto stages = detail::split(key, '|');
      if (stages.size() != mbv2::kStages) {
        throw KeyParseError(k, std::min(stages.size(), mbv2::kStages) * mbv2::kSlots,
                            "expected " + std::to_string(mbv2::kStages) + " stages, got " +
                                std::to_string(stages.size()));
      }
      for (std::size_t s = 0; s < stages.size(); ++s) {
        auto t = detail::split(stages[s], ',');
        if (t.size() != mbv2::kSlots) {
          throw KeyParseError(k, s * mbv2::kSlots + std::min(t.size(), mbv2::kSlots),
                              "stage " + std::to_string(s) + " needs " +
                                  std::to_string(mbv2::kSlots) + " slots");
        }
        tokens.insert(tokens.end(), t.begin(), t.end());
      }
      break;
    }
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i >= space.size()) throw KeyParseError(k, i, "too many tokens");
    int found = -1;
    for (std::size_t c = 0; c < space.candidates(i); ++c) {
      if (space.token(i, static_cast<int>(c)) == tokens[i]) {
        found = static_cast<int>(c);
        break;
      }
    }
    if (found < 0) throw KeyParseError(k, i, "unknown token '" + tokens[i] + "'");
    arch.choices.push_back(found);
  }
  if (arch.choices.size() != space.size()) {
    throw KeyParseError(k, arch.choices.size(),
                        "expected " + std::to_string(space.size()) + " tokens");
  }
  if (space.kind() == SpaceKind::MobileNetV2) {
    for (std::size_t s = 0; s < mbv2::kStages; ++s) {
      bool seen_skip = false;
      for (std::size_t l = 0; l < mbv2::kSlots; ++l) {
        const std::size_t i = s * mbv2::kSlots + l;
        if (arch.choices[i] == mbv2::kSkip) {
          seen_skip = true;
        } else if (seen_skip) {
          throw KeyParseError(k, i, "active layer after skip in stage " + std::to_string(s));
        }
      }
    }
  }
  return arch;
}

// ---------------------------------------------------------------------------
// Sampling and mutation

inline int uniform_index(Rng& rng, std::size_t n) {
  std::uniform_int_distribution<int> d(0, static_cast<int>(n) - 1);
  return d(rng);
}

inline Architecture random_arch(const SearchSpace& space, Rng& rng) {
  Architecture a{space.kind(), {}};
  a.choices.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    a.choices.push_back(uniform_index(rng, space.candidates(i)));
  }
  return normalize(space, std::move(a));
}

// Redraws one position (uniform over positions with >= 2 candidates) to a
// different candidate. MobileNetV2 results are re-normalized.
inline Architecture mutate(const SearchSpace& space, const Architecture& arch, Rng& rng) {
  require_valid(space, arch);
  std::vector<std::size_t> movable;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (space.candidates(i) >= 2) movable.push_back(i);
  }
  if (movable.empty()) return arch;
  const std::size_t pos = movable[static_cast<std::size_t>(uniform_index(rng, movable.size()))];
  int pick = uniform_index(rng, space.candidates(pos) - 1);
  if (pick >= arch.choices[pos]) ++pick;
  Architecture out = arch;
  out.choices[pos] = pick;
  return normalize(space, std::move(out));
}

// ---------------------------------------------------------------------------
// Enumeration

inline constexpr std::uint64_t kDefaultEnumerationGuard = 1'000'000;

// Every architecture of a small space, in key-lexicographic order.
class Enumeration {
 public:
  explicit Enumeration(const SearchSpace& space, std::uint64_t guard = kDefaultEnumerationGuard)
      : space_(&space) {
    const auto card = space_cardinality(space);
    if (card.raw > guard) {
      throw SpaceTooLarge(std::string(to_string(space.kind())) + " has " + card.str() +
                          " architectures, above the enumeration guard " + std::to_string(guard));
    }
    count_ = static_cast<std::uint64_t>(card.raw);
    for (std::size_t i = 0; i < space.size(); ++i) {
      std::vector<int> order(space.candidates(i));
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](int a, int b) { return space.token(i, a) < space.token(i, b); });
      order_.push_back(std::move(order));
    }
  }

  class iterator {
   public:
    using value_type = Architecture;
    using difference_type = std::ptrdiff_t;
    using reference = const Architecture&;
    using pointer = const Architecture*;
    using iterator_category = std::input_iterator_tag;

    iterator() = default;
    iterator(const Enumeration* e, bool end) : e_(e), done_(end) {
      if (!end) {
        digits_.assign(e_->space_->size(), 0);
        current_.kind = e_->space_->kind();
        current_.choices.resize(digits_.size());
        sync();
      }
    }
    reference operator*() const { return current_; }
    pointer operator->() const { return &current_; }
    iterator& operator++() {
      std::size_t i = digits_.size();
      while (i > 0) {
        --i;
        if (++digits_[i] < e_->order_[i].size()) {
          sync();
          return *this;
        }
        digits_[i] = 0;
      }
      done_ = true;
      return *this;
    }
    void operator++(int) { ++*this; }
    bool operator==(const iterator& o) const { return done_ == o.done_ && (done_ || digits_ == o.digits_); }

   private:
    void sync() {
      for (std::size_t i = 0; i < digits_.size(); ++i) current_.choices[i] = e_->order_[i][digits_[i]];
    }
    const Enumeration* e_ = nullptr;
    bool done_ = true;
    std::vector<std::size_t> digits_;
    Architecture current_;
  };

  iterator begin() const { return iterator(this, count_ == 0); }
  iterator end() const { return iterator(this, true); }
  std::uint64_t size() const { return count_; }

 private:
  const SearchSpace* space_;
  std::uint64_t count_ = 0;
  std::vector<std::vector<int>> order_;
};

inline Enumeration enumerate(const SearchSpace& space,
                             std::uint64_t guard = kDefaultEnumerationGuard) {
  return Enumeration(space, guard);
}

// ---------------------------------------------------------------------------
// NAS-Bench-201 string form, e.g.
// "|nor_conv_3x3~0|+|none~0|avg_pool_3x3~1|+|skip_connect~0|nor_conv_1x1~1|nor_conv_3x3~2|"

inline std::string to_nb201_string(const SearchSpace& space, const Architecture& arch) {
  require_valid(space, arch);
  if (space.kind() != SpaceKind::CellDag) throw InvalidArchitecture("not a cell architecture");
  std::string out;
  for (int target = 1; target < cell::kNodes; ++target) {
    if (target > 1) out += '+';
    out += '|';
    for (int source = 0; source < target; ++source) {
      for (std::size_t e = 0; e < 6; ++e) {
        if (cell::kEdges[e] == std::pair{source, target}) {
          out += std::string(cell::kOps[arch.choices[e]]) + "~" + std::to_string(source) + "|";
        }
      }
    }
  }
  return out;
}

inline Architecture from_nb201_string(std::string_view s) {
  Architecture a{SpaceKind::CellDag, std::vector<int>(6, -1)};
  const std::string str(s);
  auto nodes = detail::split(s, '+');
  if (nodes.size() != 3) throw KeyParseError(str, 0, "expected 3 node groups");
  std::size_t token = 0;
  for (std::size_t t = 0; t < nodes.size(); ++t) {
    const auto& g = nodes[t];
    if (g.size() < 2 || g.front() != '|' || g.back() != '|') {
      throw KeyParseError(str, token, "node group must be wrapped in '|'");
    }
    auto items = detail::split(std::string_view(g).substr(1, g.size() - 2), '|');
    if (items.size() != t + 1) throw KeyParseError(str, token, "wrong number of inputs");
    for (const auto& item : items) {
      auto tilde = item.find('~');
      if (tilde == std::string::npos) throw KeyParseError(str, token, "missing '~'");
      const std::string op = item.substr(0, tilde);
      int source = -1;
      try {
        source = std::stoi(item.substr(tilde + 1));
      } catch (const std::exception&) {
        throw KeyParseError(str, token, "bad source node");
      }
      int op_idx = -1;
      for (int o = 0; o < 5; ++o) {
        if (cell::kOps[o] == op) op_idx = o;
      }
      if (op_idx < 0) throw KeyParseError(str, token, "unknown op '" + op + "'");
      bool placed = false;
      for (std::size_t e = 0; e < 6; ++e) {
        if (cell::kEdges[e] == std::pair{source, static_cast<int>(t) + 1}) {
          a.choices[e] = op_idx;
          placed = true;
        }
      }
      if (!placed) throw KeyParseError(str, token, "bad source node");
      ++token;
    }
  }
  if (std::find(a.choices.begin(), a.choices.end(), -1) != a.choices.end()) {
    throw KeyParseError(str, token, "missing edges");
  }
  return a;
}

// ---------------------------------------------------------------------------
// MobileNetV2 architecture listings:
//
//   # Input 56 x 56 x 16
//   InvertedResidual(kernel_size=3, exp_ratio=4)
//   InvertedResidual(kernel_size=3, exp_ratio=4)
//   # Input 28 x 28 x 24
//   ...
//
// Every '#' line opens the next stage; missing slots are Skip.
inline Architecture parse_mobilenet_listing(std::string_view text) {
  Architecture a{SpaceKind::MobileNetV2, std::vector<int>(mbv2::kStages * mbv2::kSlots, mbv2::kSkip)};
  const auto space = SearchSpace::mobilenet_v2();
  int stage = -1;
  std::size_t slot = 0, line_no = 0;
  for (auto& raw : detail::split(text, '\n')) {
    ++line_no;
    std::string line = raw;
    line.erase(0, line.find_first_not_of(" \t\r"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (line.empty()) continue;
    if (line[0] == '#') {
      ++stage;
      slot = 0;
      if (stage >= static_cast<int>(mbv2::kStages)) throw FormatError(line_no, "more than 5 stages");
      continue;
    }
    if (stage < 0) throw FormatError(line_no, "layer before the first '#' stage header");
    if (slot >= mbv2::kSlots) throw FormatError(line_no, "more than 6 layers in a stage");
    int choice = -1;
    if (line == "Skip" || line == "skip") {
      choice = mbv2::kSkip;
    } else {
      int k = 0, e = 0;
      if (std::sscanf(line.c_str(), "InvertedResidual(kernel_size=%d, exp_ratio=%d)", &k, &e) != 2) {
        throw FormatError(line_no, "expected InvertedResidual(kernel_size=K, exp_ratio=E)");
      }
      const auto& cands = space.positions()[0].candidates;
      for (std::size_t c = 0; c < cands.size(); ++c) {
        if (!cands[c].skip && cands[c].kernel == k && cands[c].expansion == e) choice = static_cast<int>(c);
      }
      if (choice < 0) throw FormatError(line_no, "no MBConv candidate with kernel " + std::to_string(k) +
                                                     " and expansion " + std::to_string(e));
    }
    a.choices[static_cast<std::size_t>(stage) * mbv2::kSlots + slot++] = choice;
  }
  if (stage != static_cast<int>(mbv2::kStages) - 1) throw FormatError(line_no, "expected 5 stages");
  require_valid(space, a);
  return a;
}

}  // namespace genius
