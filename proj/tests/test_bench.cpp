// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace genius;
using namespace genius::testing;

namespace {

BenchmarkTable parse(const std::string& text) {
  std::istringstream in(text);
  return parse_benchmark(in);
}

template <class E>
std::size_t error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const E& e) {
    return e.line();
  }
  return 0;
}

const char* kHeader = R"({"space": "nas-bench-macro", "provenance": "unit", "count": 2})";

}  // namespace

TEST(Load, MinimalFile) {
  const auto t = parse(std::string(kHeader) + "\n" +
                       R"({"key": "00000000", "val_acc": 90.5, "test_acc": null})" "\n" +
                       R"({"key": "12121212", "val_acc": 91.0, "test_acc": 90.1, "flops_m": 12.5})" "\n");
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.provenance(), "unit");
  EXPECT_DOUBLE_EQ(t.lookup("12121212").get(Metric::Test), 90.1);
  // Single-accuracy entries report val for both metrics.
  EXPECT_DOUBLE_EQ(t.lookup("00000000").get(Metric::Test), 90.5);
  EXPECT_THROW(t.lookup("22222222"), UnknownArchitecture);
}

TEST(Load, ErrorsCarryLineNumbers) {
  const std::string h = std::string(kHeader) + "\n";
  EXPECT_EQ(error_line<FormatError>(h + R"({"key": "00000000", "val_acc": 90})" "\n{oops\n"), 3u);
  EXPECT_EQ(error_line<DuplicateKey>(h + R"({"key": "00000000", "val_acc": 90})" "\n" +
                                     R"({"key": "00000000", "val_acc": 91})" "\n"),
            3u);
  EXPECT_EQ(error_line<KeyParseError>(h + R"({"key": "00000000", "val_acc": 90})" "\n" +
                                      R"({"key": "0000000x", "val_acc": 91})" "\n"),
            3u);
  EXPECT_EQ(error_line<FormatError>(h + R"({"key": "00000000", "val_acc": 190})" "\n"), 2u);
  EXPECT_EQ(error_line<FormatError>(h + R"({"key": "00000000"})" "\n"), 2u);
  EXPECT_EQ(error_line<FormatError>(R"({"key": "00000000", "val_acc": 90})" "\n"), 1u);
  // Count mismatch points past the end of the file.
  EXPECT_EQ(error_line<FormatError>(h + R"({"key": "00000000", "val_acc": 90})" "\n"), 3u);
  EXPECT_THROW(parse(R"({"space": "imagenet", "count": 0})" "\n"), FormatError);
  EXPECT_THROW(parse(""), FormatError);
  EXPECT_THROW(load_benchmark("/nonexistent/bench.jsonl"), IoError);
}

TEST(Load, ChannelWidthsInferredFromKeys) {
  std::ostringstream o;
  o << R"({"space": "channel-bench-macro", "provenance": "unit", "count": 4, "base_model": "resnet"})" << "\n"
    << R"({"key": "16,16,32,32,64,64,128", "val_acc": 90})" << "\n"
    << R"({"key": "32,32,64,64,128,128,256", "val_acc": 91})" << "\n"
    << R"({"key": "48,48,96,96,192,192,384", "val_acc": 92})" << "\n"
    << R"({"key": "64,64,128,128,256,256,512", "val_acc": 93})" << "\n";
  const auto t = parse(o.str());
  EXPECT_EQ(t.space().base_model(), "resnet");
  EXPECT_EQ(t.optimum(Metric::Val).first, "64,64,128,128,256,256,512");
  EXPECT_EQ(t.space().positions()[6].candidates.back().width, 512);
  EXPECT_EQ(t.space().positions()[6].candidates.front().width, 128);
  // Two widths per layer cannot fill four candidates.
  std::ostringstream few;
  few << R"({"space": "channel-bench-macro", "count": 1})" << "\n"
      << R"({"key": "16,16,32,32,64,64,128", "val_acc": 90})" << "\n";
  EXPECT_THROW(parse(few.str()), FormatError);
}

TEST(Save, RoundTripIsCanonical) {
  const auto synth = synth_benchmark(SearchSpace::cell_dag(), 4, {.with_test = true});
  const auto text = to_jsonl(synth.table);
  const auto back = parse(text);
  EXPECT_EQ(back.entries(), synth.table.entries());
  EXPECT_EQ(to_jsonl(back), text);

  const auto dir = temp_dir("bench-save");
  const auto ch = synth_benchmark(channel_space(), 2);
  save_benchmark(ch.table, (dir / "ch.jsonl").string());
  const auto ch2 = load_benchmark((dir / "ch.jsonl").string());
  EXPECT_EQ(ch2.entries(), ch.table.entries());
  EXPECT_EQ(ch2.space(), ch.table.space());
}

TEST(Rank, TieRuleIsOnePlusStrictlyGreater) {
  const auto space = SearchSpace::macro_ops();
  const auto t = table_from_values(space, {"00000000", "00000001", "00000002", "00000010", "00000011"},
                                   {93.0, 92.0, 93.0, 91.0, 92.0});
  EXPECT_EQ(t.rank_of(93.0, Metric::Val), 1u);
  EXPECT_EQ(t.rank_of(92.0, Metric::Val), 3u);
  EXPECT_EQ(t.rank_of(91.0, Metric::Val), 5u);
  EXPECT_EQ(t.rank_of(95.0, Metric::Val), 1u);
  EXPECT_EQ(t.rank_of(10.0, Metric::Val), 6u);
  // Optimum ties go to the smallest key.
  EXPECT_EQ(t.optimum(Metric::Val).first, "00000000");
}

TEST(Rank, MatchesSortOracle) {
  const auto space = SearchSpace::cell_dag();
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    auto keys = all_digit_keys(6, 5);
    std::shuffle(keys.begin(), keys.end(), rng);
    keys.resize(1 + rng() % keys.size());
    std::vector<double> vals;
    std::uniform_int_distribution<int> d(8000, 9400);  // coarse grid forces ties
    for (std::size_t i = 0; i < keys.size(); ++i) vals.push_back(d(rng) / 100.0);
    const auto t = table_from_values(space, keys, vals);
    for (std::size_t i = 0; i < keys.size(); i += 1 + keys.size() / 200) {
      ASSERT_EQ(t.rank_of(vals[i], Metric::Val), sort_rank(vals, vals[i]));
    }
    EXPECT_EQ(t.rank_of(t.optimum(Metric::Val).second.val_acc, Metric::Val), 1u);
  }
}

TEST(Stats, Basic) {
  const auto t = table_from_values(SearchSpace::macro_ops(), {"00000000", "00000001", "00000002"},
                                   {90.0, 92.0, 91.0});
  const auto s = bench_stats(t, Metric::Val);
  EXPECT_EQ(s.count, 3u);
  EXPECT_DOUBLE_EQ(s.min, 90.0);
  EXPECT_DOUBLE_EQ(s.max, 92.0);
  EXPECT_DOUBLE_EQ(s.mean, 91.0);
  EXPECT_EQ(s.optimum_key, "00000001");
}

TEST(Synth, DeterministicPerSeed) {
  const auto space = SearchSpace::macro_ops();
  EXPECT_EQ(to_jsonl(synth_benchmark(space, 9).table), to_jsonl(synth_benchmark(space, 9).table));
  EXPECT_NE(to_jsonl(synth_benchmark(space, 9).table), to_jsonl(synth_benchmark(space, 10).table));
}

TEST(Synth, PlantedOptimumIsTheBruteForceMaximum) {
  for (auto space : {SearchSpace::macro_ops(), SearchSpace::cell_dag(), channel_space()}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto s = synth_benchmark(space, seed);
      std::string best_key;
      double best = -1;
      std::size_t at_best = 0;
      for (const auto& [k, m] : s.table.entries()) {
        if (m.val_acc > best) best = m.val_acc, best_key = k, at_best = 1;
        else if (m.val_acc == best) ++at_best;
      }
      EXPECT_EQ(at_best, 1u);
      EXPECT_EQ(best_key, canonical_key(space, s.best));
      EXPECT_EQ(s.table.optimum(Metric::Val).first, best_key);
    }
  }
}

TEST(Synth, RejectsNoiseLargerThanMargin) {
  EXPECT_THROW(synth_benchmark(SearchSpace::macro_ops(), 1, {.noise = 0.5, .margin = 0.5}), Error);
}
