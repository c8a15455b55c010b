// SPDX-License-Identifier: Apache-2.0
//
// Prints the FLOPs breakdown of the two searched ImageNet models under both
// stage plans.

#include <fstream>
#include <iostream>
#include <sstream>

#include "genius/genius.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  using namespace genius;
  const auto space = SearchSpace::mobilenet_v2();
  for (const char* name : {"genius329", "genius401"}) {
    const auto arch = parse_mobilenet_listing(slurp(std::string(GENIUS_SAMPLE_DATA) + "/" + name + ".txt"));
    std::cout << name << "  " << canonical_key(space, arch) << "\n";
    for (auto [label, plan] : {std::pair{"reported ", flops::StagePlan::reported()},
                               std::pair{"tabulated", flops::StagePlan::tabulated()}}) {
      const auto b = flops::flops_breakdown(space, arch, plan);
      std::cout << "  " << label << " " << format_fixed(b.total_m(), 2) << " M  (stem "
                << format_fixed(b.stem / 1e6, 2) << ", head " << format_fixed(b.head / 1e6, 2) << ")\n";
    }
  }
}
