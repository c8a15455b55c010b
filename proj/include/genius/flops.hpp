// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genius/error.hpp"
#include "genius/space.hpp"

// Multiply-add counts for the MobileNetV2 search space. All counts are exact
// integers (MACs); "M" values are MACs / 1e6. Batch-norm and activations are
// not counted.
namespace genius::flops {

using Macs = std::int64_t;

inline constexpr int ceil_div(int a, int b) { return (a + b - 1) / b; }

// Dense or grouped k x k convolution on a square input.
inline Macs conv_macs(int kernel, int in_ch, int out_ch, int in_hw, int stride, int groups = 1) {
  if (kernel <= 0 || in_ch <= 0 || out_ch <= 0 || in_hw <= 0 || stride <= 0 || groups <= 0) {
    throw DimensionError("convolution dimensions must be positive");
  }
  if (in_ch % groups != 0) throw DimensionError("input channels not divisible by groups");
  const Macs out_hw = ceil_div(in_hw, stride);
  return static_cast<Macs>(kernel) * kernel * (in_ch / groups) * out_ch * out_hw * out_hw;
}

inline Macs conv_params(int kernel, int in_ch, int out_ch, int groups = 1) {
  return static_cast<Macs>(kernel) * kernel * (in_ch / groups) * out_ch;
}

// Cost of one searchable layer. `spatial` scales with the feature-map area;
// `se_fc` is the squeeze-excitation pair of fully-connected layers, which does not.
struct LayerCost {
  Macs spatial = 0;
  Macs se_fc = 0;

  Macs total() const { return spatial + se_fc; }
  bool operator==(const LayerCost&) const = default;
};

// MBConv(k, e): expand 1x1 -> depthwise k x k (stride) -> SE(r=4) -> project 1x1.
inline LayerCost mbconv_cost(int kernel, int expansion, int in_ch, int out_ch, int hw, int stride) {
  if (kernel <= 0 || expansion <= 0 || in_ch <= 0 || out_ch <= 0 || hw <= 0 || stride <= 0) {
    throw DimensionError("MBConv dimensions must be positive");
  }
  const Macs hidden = static_cast<Macs>(expansion) * in_ch;
  const Macs out_hw = ceil_div(hw, stride);
  const Macs out_area = out_hw * out_hw;
  LayerCost c;
  c.spatial = in_ch * hidden * hw * hw            // expand
              + kernel * kernel * hidden * out_area  // depthwise
              + hidden * out_area                    // SE pooling + channel scale
              + hidden * out_ch * out_area;          // project
  c.se_fc = 2 * hidden * (hidden / 4);
  return c;
}

inline Macs mbconv_params(int kernel, int expansion, int in_ch, int out_ch) {
  const Macs hidden = static_cast<Macs>(expansion) * in_ch;
  return in_ch * hidden + kernel * kernel * hidden + 2 * hidden * (hidden / 4) + hidden * out_ch;
}

inline LayerCost layer_flops(const Choice& choice, int in_ch, int out_ch, int hw, int stride) {
  if (in_ch <= 0 || out_ch <= 0 || hw <= 0 || stride <= 0) {
    throw DimensionError("layer dimensions must be positive");
  }
  if (choice.skip) return {};
  return mbconv_cost(choice.kernel, choice.expansion, in_ch, out_ch, hw, stride);
}

struct StageGroup {
  int channels = 0;
  int max_blocks = 0;
  int stride = 1;  // stride of the first block in the group

  bool operator==(const StageGroup&) const = default;
};

// Macro skeleton around the searchable stages.
struct StagePlan {
  int resolution = 224;
  int input_channels = 3;
  int stem_channels = 16;  // 3x3 conv
  int stem_stride = 2;
  int stem_sep_channels = 16;  // 3x3 depthwise + 1x1 pointwise
  int stem_sep_stride = 1;
  std::array<StageGroup, mbv2::kStages> groups{};
  int head_channels = 320;      // 1x1 conv after the last group
  int feature_channels = 1280;  // 1x1 conv feeding the classifier
  bool feature_conv_before_pool = true;
  int num_classes = 1000;

  // Layout whose counts reproduce the published GENIUS-329/401 FLOPs:
  // 16@112 -> 24@56 -> 40@28 -> 80@14 -> 96@14 -> 192@7 -> 320 -> 1280 -> pool -> FC.
  static StagePlan reported(int resolution = 224) {
    StagePlan p;
    p.resolution = resolution;
    p.stem_sep_stride = 1;
    p.groups = {{{24, 6, 2}, {40, 6, 2}, {80, 6, 2}, {96, 6, 1}, {192, 6, 2}}};
    p.feature_conv_before_pool = true;
    return p;
  }

  // The stage table exactly as tabulated: 16@56 -> 24@28 -> 40@14 -> 80@14 ->
  // 96@7 -> 192@7 -> 320 -> pool -> 1280 -> FC.
  static StagePlan tabulated(int resolution = 224) {
    StagePlan p;
    p.resolution = resolution;
    p.stem_sep_stride = 2;
    p.groups = {{{24, 6, 2}, {40, 6, 2}, {80, 6, 1}, {96, 6, 2}, {192, 6, 1}}};
    p.feature_conv_before_pool = false;
    return p;
  }

  StagePlan at_resolution(int r) const {
    StagePlan p = *this;
    p.resolution = r;
    return p;
  }

  bool operator==(const StagePlan&) const = default;
};

struct SlotShape {
  int in_channels = 0;
  int out_channels = 0;
  int hw = 0;  // input spatial size
  int stride = 1;
};

inline void check_plan(const StagePlan& plan) {
  if (plan.resolution <= 0 || plan.input_channels <= 0 || plan.stem_channels <= 0 ||
      plan.stem_stride <= 0 || plan.stem_sep_channels <= 0 || plan.stem_sep_stride <= 0 ||
      plan.head_channels <= 0 || plan.feature_channels <= 0 || plan.num_classes <= 0) {
    throw DimensionError("stage plan dimensions must be positive");
  }
  for (const auto& g : plan.groups) {
    if (g.channels <= 0 || g.stride <= 0 || g.max_blocks != static_cast<int>(mbv2::kSlots)) {
      throw DimensionError("stage groups need positive channels/stride and 6 slots");
    }
  }
}

inline int stem_output_hw(const StagePlan& plan) {
  return ceil_div(ceil_div(plan.resolution, plan.stem_stride), plan.stem_sep_stride);
}

// Input shape of every (stage, slot). Shapes are nominal: they do not depend on
// which earlier slots are skipped.
inline std::array<std::array<SlotShape, mbv2::kSlots>, mbv2::kStages> slot_shapes(const StagePlan& plan) {
  check_plan(plan);
  std::array<std::array<SlotShape, mbv2::kSlots>, mbv2::kStages> out{};
  int ch = plan.stem_sep_channels;
  int hw = stem_output_hw(plan);
  for (std::size_t s = 0; s < mbv2::kStages; ++s) {
    const auto& g = plan.groups[s];
    out[s][0] = {ch, g.channels, hw, g.stride};
    hw = ceil_div(hw, g.stride);
    ch = g.channels;
    for (std::size_t l = 1; l < mbv2::kSlots; ++l) out[s][l] = {ch, ch, hw, 1};
  }
  return out;
}

inline int final_hw(const StagePlan& plan) {
  int hw = stem_output_hw(plan);
  for (const auto& g : plan.groups) hw = ceil_div(hw, g.stride);
  return hw;
}

struct FixedCost {
  Macs stem = 0;
  Macs head = 0;
  Macs total() const { return stem + head; }
};

inline FixedCost fixed_cost(const StagePlan& plan) {
  check_plan(plan);
  FixedCost f;
  const int stem_hw = ceil_div(plan.resolution, plan.stem_stride);
  f.stem = conv_macs(3, plan.input_channels, plan.stem_channels, plan.resolution, plan.stem_stride) +
           conv_macs(3, plan.stem_channels, plan.stem_channels, stem_hw, plan.stem_sep_stride,
                     plan.stem_channels) +
           conv_macs(1, plan.stem_channels, plan.stem_sep_channels, stem_output_hw(plan), 1);
  const int hw = final_hw(plan);
  const int last = plan.groups.back().channels;
  f.head = conv_macs(1, last, plan.head_channels, hw, 1) +
           conv_macs(1, plan.head_channels, plan.feature_channels,
                     plan.feature_conv_before_pool ? hw : 1, 1) +
           static_cast<Macs>(plan.feature_channels) * plan.num_classes;
  return f;
}

struct FlopsBreakdown {
  Macs stem = 0;
  std::array<Macs, mbv2::kStages> stages{};
  Macs head = 0;

  Macs total() const {
    Macs t = stem + head;
    for (auto s : stages) t += s;
    return t;
  }
  double total_m() const { return static_cast<double>(total()) / 1e6; }
};

inline FlopsBreakdown flops_breakdown(const SearchSpace& space, const Architecture& arch,
                                      const StagePlan& plan) {
  if (space.kind() != SpaceKind::MobileNetV2) {
    throw InvalidArchitecture("FLOPs model applies to the MobileNetV2 space only");
  }
  require_valid(space, arch);
  const auto shapes = slot_shapes(plan);
  const auto fixed = fixed_cost(plan);
  FlopsBreakdown b;
  b.stem = fixed.stem;
  b.head = fixed.head;
  for (std::size_t s = 0; s < mbv2::kStages; ++s) {
    for (std::size_t l = 0; l < mbv2::kSlots; ++l) {
      const std::size_t i = s * mbv2::kSlots + l;
      const auto& sh = shapes[s][l];
      const auto& choice = space.positions()[i].candidates[static_cast<std::size_t>(arch.choices[i])];
      b.stages[s] += layer_flops(choice, sh.in_channels, sh.out_channels, sh.hw, sh.stride).total();
    }
  }
  return b;
}

// Total multiply-adds in millions.
inline double total_flops(const SearchSpace& space, const Architecture& arch, const StagePlan& plan) {
  return flops_breakdown(space, arch, plan).total_m();
}

inline double total_params_m(const SearchSpace& space, const Architecture& arch, const StagePlan& plan) {
  require_valid(space, arch);
  const auto shapes = slot_shapes(plan);
  Macs p = conv_params(3, plan.input_channels, plan.stem_channels) +
           conv_params(3, plan.stem_channels, plan.stem_channels, plan.stem_channels) +
           conv_params(1, plan.stem_channels, plan.stem_sep_channels);
  for (std::size_t s = 0; s < mbv2::kStages; ++s) {
    for (std::size_t l = 0; l < mbv2::kSlots; ++l) {
      const std::size_t i = s * mbv2::kSlots + l;
      const auto& c = space.positions()[i].candidates[static_cast<std::size_t>(arch.choices[i])];
      if (!c.skip) p += mbconv_params(c.kernel, c.expansion, shapes[s][l].in_channels, shapes[s][l].out_channels);
    }
  }
  p += conv_params(1, plan.groups.back().channels, plan.head_channels) +
       conv_params(1, plan.head_channels, plan.feature_channels) +
       static_cast<Macs>(plan.feature_channels) * plan.num_classes + plan.num_classes;
  return static_cast<double>(p) / 1e6;
}

// Per-layer look-up table: entry(stage, slot, choice) for the plan's nominal
// slot shapes. total == fixed + sum of selected entries, exactly.
class FlopsTable {
 public:
  FlopsTable(const SearchSpace& space, const StagePlan& plan) : plan_(plan) {
    if (space.kind() != SpaceKind::MobileNetV2) {
      throw InvalidArchitecture("FLOPs table applies to the MobileNetV2 space only");
    }
    const auto shapes = slot_shapes(plan);
    fixed_ = fixed_cost(plan);
    for (std::size_t s = 0; s < mbv2::kStages; ++s) {
      for (std::size_t l = 0; l < mbv2::kSlots; ++l) {
        const auto& sh = shapes[s][l];
        const auto& cands = space.positions()[s * mbv2::kSlots + l].candidates;
        for (std::size_t c = 0; c < cands.size(); ++c) {
          entries_[s][l][c] = layer_flops(cands[c], sh.in_channels, sh.out_channels, sh.hw, sh.stride);
        }
      }
    }
  }

  const StagePlan& plan() const { return plan_; }
  const FixedCost& fixed() const { return fixed_; }
  const LayerCost& entry(std::size_t stage, std::size_t slot, std::size_t choice) const {
    return entries_[stage][slot][choice];
  }

  Macs total_macs(const Architecture& arch) const {
    Macs t = fixed_.total();
    for (std::size_t i = 0; i < arch.choices.size() && i < mbv2::kStages * mbv2::kSlots; ++i) {
      t += entries_[i / mbv2::kSlots][i % mbv2::kSlots][static_cast<std::size_t>(arch.choices[i])].total();
    }
    return t;
  }

  // Structure embedded into the advisor's problem encoding:
  // {"unit", "resolution", "fixed_m", "choices": [...], "stages": [[[m x 7] x 6] x 5]}
  nlohmann::ordered_json to_json(const SearchSpace& space) const {
    nlohmann::ordered_json j;
    j["unit"] = "M multiply-adds";
    j["resolution"] = plan_.resolution;
    j["fixed_m"] = round3(fixed_.total());
    auto names = nlohmann::ordered_json::array();
    for (const auto& c : space.positions()[0].candidates) names.push_back(c.name);
    j["choices"] = names;
    auto stages = nlohmann::ordered_json::array();
    for (std::size_t s = 0; s < mbv2::kStages; ++s) {
      auto slots = nlohmann::ordered_json::array();
      for (std::size_t l = 0; l < mbv2::kSlots; ++l) {
        auto row = nlohmann::ordered_json::array();
        for (std::size_t c = 0; c < static_cast<std::size_t>(mbv2::kChoices); ++c) {
          row.push_back(round3(entries_[s][l][c].total()));
        }
        slots.push_back(std::move(row));
      }
      stages.push_back(std::move(slots));
    }
    j["stages"] = std::move(stages);
    return j;
  }

 private:
  static double round3(Macs m) { return static_cast<double>((m + 500) / 1000) / 1000.0; }

  StagePlan plan_;
  FixedCost fixed_;
  std::array<std::array<std::array<LayerCost, mbv2::kChoices>, mbv2::kSlots>, mbv2::kStages> entries_{};
};

inline FlopsTable build_flops_table(const SearchSpace& space, const StagePlan& plan) {
  return FlopsTable(space, plan);
}

}  // namespace genius::flops
