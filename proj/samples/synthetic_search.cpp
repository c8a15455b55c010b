// SPDX-License-Identifier: Apache-2.0
//
// Builds a synthetic NAS-Bench-Macro table, runs three hill-climbing trials
// against it and prints the summary next to the random-sampling baseline.

#include <iostream>

#include "genius/genius.hpp"

int main() {
  using namespace genius;
  const auto space = SearchSpace::macro_ops();
  const auto synth = synth_benchmark(space, 7);
  BenchmarkEvaluator evaluator(synth.table);

  RunConfig cfg;
  cfg.iterations = 10;
  cfg.trials = 3;
  cfg.seed = 1;
  auto traces = run_trials(evaluator, cfg, [](int, std::uint64_t seed) {
    return std::make_unique<HillClimbAdvisor>(seed);
  });

  ExperimentLog log{run_metadata(cfg, space, "hillclimb", synth.table.provenance()), traces};
  std::cout << summary_table(log, &synth.table).text() << "\n";

  const auto base = random_baseline(synth.table, 10, 10'000, 0);
  std::cout << "random best-of-10: " << format_fixed(base.mean) << " +- " << format_fixed(base.std) << "\n"
            << "optimum:           " << synth.table.optimum(Metric::Val).first << " "
            << format_fixed(synth.table.optimum(Metric::Val).second.val_acc) << "\n";
}
