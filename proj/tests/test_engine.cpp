// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "support.hpp"

using namespace genius;
using namespace genius::testing;

namespace {

std::unique_ptr<AdvisorSession> session_of(const SearchSpace& space, std::unique_ptr<Advisor> a,
                                           const RunConfig& cfg) {
  SessionOptions o;
  o.flops_limit_m = cfg.flops_limit_m;
  o.parse_retry_budget = cfg.parse_retry_budget;
  return std::make_unique<AdvisorSession>(space, std::move(a), o);
}

std::string mb_reply(const Architecture& a) { return format_reply(a, "scripted"); }

Architecture mb_uniform(int choice, int active_per_stage) {
  Architecture a{SpaceKind::MobileNetV2, std::vector<int>(30, mbv2::kSkip)};
  for (std::size_t s = 0; s < 5; ++s) {
    for (int l = 0; l < active_per_stage; ++l) a.choices[s * 6 + static_cast<std::size_t>(l)] = choice;
  }
  return a;
}

}  // namespace

TEST(Replay, ReproducesThePublishedTrial) {
  const auto rt = ranked_macro_table(replay_trial_anchors(), 80.0, 1234);
  std::vector<Architecture> fx;
  for (auto r : replay_trial_ranks()) fx.push_back(parse_key(rt.table.space(), rt.key_at_rank[r - 1]));
  BenchmarkEvaluator ev(rt.table);
  RunConfig cfg;
  cfg.iterations = 10;
  auto s = session_of(ev.space(), std::make_unique<ReplayAdvisor>(fx), cfg);
  const auto tr = run_genius(ev, *s, cfg);
  EXPECT_EQ(tr.status, TerminalStatus::NoImprovementDeclared);
  ASSERT_EQ(tr.records.size(), 6u);
  const std::vector<double> acc = {85.70, 92.62, 92.82, 93.05, 92.95, 92.46};
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(*tr.records[i].val_acc, acc[i], 1e-9);
    EXPECT_EQ(*tr.records[i].rank, replay_trial_ranks()[i]);
  }
  EXPECT_EQ(*best_of_trace(tr, Metric::Val).rank, 8u);
  // Feedback prompts carry the two-decimal accuracy.
  EXPECT_EQ(s->transcript()[2].content, feedback_prompt(85.70));
}

TEST(Loop, FirstPromptIsTheEncodingThenFeedback) {
  const auto synth = synth_benchmark(SearchSpace::macro_ops(), 3);
  BenchmarkEvaluator ev(synth.table);
  RunConfig cfg;
  cfg.iterations = 3;
  auto s = session_of(ev.space(), std::make_unique<RandomAdvisor>(1), cfg);
  const auto tr = run_genius(ev, *s, cfg);
  EXPECT_EQ(tr.status, TerminalStatus::Completed);
  ASSERT_EQ(tr.records.size(), 3u);
  EXPECT_EQ(s->transcript()[0].content, encode_problem(ev.space()));
  EXPECT_EQ(s->transcript()[4].content, feedback_prompt(*tr.records[1].val_acc));
  EXPECT_EQ(s->history().records().size(), 3u);
  for (const auto& r : tr.records) {
    EXPECT_EQ(*r.rank, synth.table.rank_of(*r.val_acc, Metric::Val));
    EXPECT_EQ(r.digest.size(), 16u);
  }
}

TEST(Loop, UnknownArchitectureIsRecordedAndTheLoopContinues) {
  const auto space = SearchSpace::macro_ops();
  const auto t = table_from_values(space, {"00000000", "11111111"}, {90.0, 91.0});
  BenchmarkEvaluator ev(t);
  RunConfig cfg;
  cfg.iterations = 3;
  auto s = session_of(space, std::make_unique<ScriptedAdvisor>(std::vector<std::string>{
                                 mb_reply(parse_key(space, "00000000")), mb_reply(parse_key(space, "22222222")),
                                 mb_reply(parse_key(space, "11111111"))}),
                      cfg);
  const auto tr = run_genius(ev, *s, cfg);
  ASSERT_EQ(tr.records.size(), 3u);
  EXPECT_EQ(tr.records[1].status, RecordStatus::UnknownArchitecture);
  EXPECT_EQ(tr.records[1].key, "22222222");
  EXPECT_FALSE(tr.records[1].val_acc);
  EXPECT_NE(s->transcript()[4].content.find("22222222"), std::string::npos);
  EXPECT_EQ(best_of_trace(tr, Metric::Val).key, "11111111");
}

TEST(Loop, DuplicatesAreFlagged) {
  const auto space = SearchSpace::macro_ops();
  const auto synth = synth_benchmark(space, 1);
  BenchmarkEvaluator ev(synth.table);
  const auto a = parse_key(space, "01201201");
  RunConfig cfg;
  cfg.iterations = 2;
  auto s = session_of(space, std::make_unique<ReplayAdvisor>(std::vector<Architecture>{a, a}), cfg);
  const auto tr = run_genius(ev, *s, cfg);
  EXPECT_FALSE(tr.records[0].duplicate);
  EXPECT_TRUE(tr.records[1].duplicate);
}

TEST(Loop, AdvisorFailureEndsTheTrial) {
  const auto synth = synth_benchmark(SearchSpace::macro_ops(), 1);
  BenchmarkEvaluator ev(synth.table);
  RunConfig cfg;
  cfg.iterations = 5;
  cfg.parse_retry_budget = 1;
  auto s = session_of(ev.space(), std::make_unique<ScriptedAdvisor>(std::vector<std::string>{
                                      format_reply(synth.best, ""), "junk", "junk"}),
                      cfg);
  const auto tr = run_genius(ev, *s, cfg);
  EXPECT_EQ(tr.status, TerminalStatus::AdvisorFailed);
  EXPECT_EQ(tr.records.size(), 1u);
  EXPECT_FALSE(tr.failure.empty());
}

TEST(Loop, HillClimbFindsThePlantedOptimum) {
  const auto synth = synth_benchmark(SearchSpace::macro_ops(), 21);
  BenchmarkEvaluator ev(synth.table);
  RunConfig cfg;
  cfg.iterations = 200;
  auto s = session_of(ev.space(), std::make_unique<HillClimbAdvisor>(4), cfg);
  const auto tr = run_genius(ev, *s, cfg);
  EXPECT_EQ(best_of_trace(tr, Metric::Val).key, canonical_key(ev.space(), synth.best));
  EXPECT_EQ(*best_of_trace(tr, Metric::Val).rank, 1u);
}

TEST(Flops, OneRetryThenAccepted) {
  // 450M proposal, then one within a 400M limit.
  const auto space = SearchSpace::mobilenet_v2();
  const auto big = mb_uniform(0, 6);
  const auto small = mb_uniform(0, 2);
  std::map<std::string, double> fake = {{canonical_key(space, big), 450.0}, {canonical_key(space, small), 380.0}};
  AdvisorSession s(space, std::make_unique<ScriptedAdvisor>(std::vector<std::string>{mb_reply(small)}));
  const auto e = enforce_flops(s, ArchProposal{big, ""}, 400.0, 5,
                               [&](const Architecture& a) { return fake.at(canonical_key(space, a)); });
  EXPECT_EQ(e.retries, 1);
  EXPECT_DOUBLE_EQ(e.flops_m, 380.0);
  EXPECT_EQ(*e.arch, small);
  EXPECT_EQ(s.transcript()[0].content, flops_violation_prompt(450.0, 400.0));
}

TEST(Flops, ConstraintUnsatisfiedExactlyAtBudget) {
  const auto space = SearchSpace::mobilenet_v2();
  const auto big = mb_uniform(0, 6);
  auto scripted = std::make_unique<ScriptedAdvisor>(std::vector<std::string>(10, mb_reply(big)));
  auto* raw = scripted.get();
  AdvisorSession s(space, std::move(scripted));
  try {
    enforce_flops(s, ArchProposal{big, ""}, 400.0, 3, [](const Architecture&) { return 450.0; });
    FAIL();
  } catch (const ConstraintUnsatisfied& e) {
    EXPECT_EQ(e.retries(), 3);
  }
  EXPECT_EQ(raw->calls(), 3u);
}

TEST(Flops, BoundaryIsStrict) {
  const auto space = SearchSpace::mobilenet_v2();
  const auto a = mb_uniform(1, 3);
  AdvisorSession s(space, std::make_unique<ScriptedAdvisor>(std::vector<std::string>{}));
  const auto e = enforce_flops(s, ArchProposal{a, ""}, 400.0, 0, [](const Architecture&) { return 400.0; });
  EXPECT_EQ(e.retries, 0);
  EXPECT_THROW(enforce_flops(s, ArchProposal{a, ""}, 400.0, 0, [](const Architecture&) { return 400.01; }),
               ConstraintUnsatisfied);
}

TEST(Flops, LimitedRunNeverRecordsAViolation) {
  SyntheticFlopsEvaluator ev(5);
  RunConfig cfg;
  cfg.iterations = 8;
  cfg.flops_limit_m = 480.0;
  cfg.max_constraint_retries = 4;
  cfg.trials = 3;
  const auto traces =
      run_trials(ev, cfg, [](int, std::uint64_t seed) { return std::make_unique<RandomAdvisor>(seed); });
  const flops::FlopsTable table(ev.space(), flops::StagePlan::reported());
  int ok = 0, unsatisfied = 0;
  for (const auto& tr : traces) {
    EXPECT_EQ(tr.records.size(), 8u);
    for (const auto& r : tr.records) {
      if (r.status == RecordStatus::ConstraintUnsatisfied) {
        ++unsatisfied;
        EXPECT_EQ(r.constraint_retries, 4);
        EXPECT_TRUE(r.key.empty());
        continue;
      }
      ++ok;
      const double f = static_cast<double>(table.total_macs(parse_key(ev.space(), r.key))) / 1e6;
      EXPECT_LE(f, 480.0);
      EXPECT_DOUBLE_EQ(*r.flops_m, f);
    }
  }
  EXPECT_GT(ok, 0);
  EXPECT_GT(unsatisfied, 0);
}

TEST(Trials, SeedsAreBasePlusIndexAndRerunsMatch) {
  const auto synth = synth_benchmark(SearchSpace::cell_dag(), 8);
  BenchmarkEvaluator ev(synth.table);
  RunConfig cfg;
  cfg.iterations = 6;
  cfg.trials = 4;
  cfg.seed = 100;
  auto factory = [](int, std::uint64_t seed) { return std::make_unique<HillClimbAdvisor>(seed); };
  const auto a = run_trials(ev, cfg, factory);
  cfg.parallel = 3;
  const auto b = run_trials(ev, cfg, factory);
  EXPECT_EQ(a, b);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(a[static_cast<std::size_t>(i)].seed, 100u + static_cast<std::uint64_t>(i));
  EXPECT_NE(a[0].records, a[1].records);
}

TEST(Best, EarliestWinsTiesAndFailuresAreSkipped) {
  Trace t;
  IterationRecord r0{.t = 0, .key = "a", .val_acc = 91.0};
  IterationRecord r1{.t = 1, .status = RecordStatus::UnknownArchitecture, .key = "b"};
  IterationRecord r2{.t = 2, .key = "c", .val_acc = 92.0, .test_acc = 90.0};
  IterationRecord r3{.t = 3, .key = "d", .val_acc = 92.0, .test_acc = 91.0};
  t.records = {r0, r1, r2, r3};
  EXPECT_EQ(best_of_trace(t, Metric::Val).key, "c");
  EXPECT_EQ(best_of_trace(t, Metric::Test).key, "a");
  EXPECT_THROW(best_of_trace(Trace{}, Metric::Val), EmptyTrace);
}

TEST(Baseline, ExactExpectationOracles) {
  const std::vector<double> v = {90.0, 91.0, 92.0};
  EXPECT_NEAR(exact_best_of_k_expectation(v, 2), 823.0 / 9.0, 1e-12);
  EXPECT_NEAR(exact_best_of_k_expectation(v, 1), 91.0, 1e-12);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> d(0, 6);
  for (std::size_t n = 1; n <= 6; ++n) {
    for (int k = 1; k <= 4; ++k) {
      std::vector<double> vals;
      for (std::size_t i = 0; i < n; ++i) vals.push_back(90.0 + d(rng));  // ties likely
      EXPECT_NEAR(exact_best_of_k_expectation(vals, k), brute_force_best_of_k(vals, k), 1e-9);
    }
  }
}

TEST(Baseline, MonotoneInK) {
  const auto synth = synth_benchmark(SearchSpace::macro_ops(), 2);
  double prev = 0;
  for (int k = 1; k <= 64; k *= 2) {
    const double e = exact_best_of_k_expectation(synth.table, k);
    EXPECT_GT(e, prev);
    prev = e;
  }
  EXPECT_LE(prev, synth.table.optimum(Metric::Val).second.val_acc);
}

TEST(Baseline, EmpiricalMatchesExact) {
  const auto synth = synth_benchmark(SearchSpace::macro_ops(), 6);
  const auto r = random_baseline(synth.table, 10, 10'000, 1);
  const double exact = exact_best_of_k_expectation(synth.table, 10);
  EXPECT_LE(std::abs(r.mean - exact), 3 * r.std / std::sqrt(10'000.0));
  EXPECT_EQ(r.bests.size(), 10'000u);
  EXPECT_EQ(random_baseline(synth.table, 10, 50, 9).bests, random_baseline(synth.table, 10, 50, 9).bests);
  EXPECT_THROW(random_baseline(std::span<const double>{}, 1, 1, 0), Error);
}

TEST(Synthetic, FlopsEvaluatorIsDeterministicAndFavoursFlops) {
  SyntheticFlopsEvaluator a(3), b(3);
  const auto big = mb_uniform(5, 6), small = mb_uniform(0, 1);
  EXPECT_EQ(a.evaluate(big).val_acc, b.evaluate(big).val_acc);
  EXPECT_GT(a.evaluate(big).val_acc, a.evaluate(small).val_acc);
  EXPECT_GT(*a.evaluate(big).flops_m, *a.evaluate(small).flops_m);
}
