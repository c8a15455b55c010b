// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "genius/advisor.hpp"
#include "genius/bench.hpp"
#include "genius/error.hpp"
#include "genius/flops.hpp"
#include "genius/space.hpp"

namespace genius {

// Proxy-training knobs of the ImageNet search. Recorded, never executed.
struct ProxyEvaluation {
  int epochs = 20;
  int input_size = 196;
};

struct RunConfig {
  int iterations = 10;
  double temperature = 0.0;
  int trials = 1;
  std::uint64_t seed = 0;
  std::optional<double> flops_limit_m;
  int max_constraint_retries = 5;
  int parse_retry_budget = 3;
  int context_turns = 0;
  int flops_resolution = 224;
  Metric feedback_metric = Metric::Val;
  Metric report_metric = Metric::Test;
  ProxyEvaluation proxy;
  int parallel = 1;

  void check() const {
    if (iterations < 1) throw Error("iterations must be >= 1");
    if (trials < 1) throw Error("trials must be >= 1");
    if (max_constraint_retries < 0 || parse_retry_budget < 0) throw Error("retry budgets must be >= 0");
    if (parallel < 1) throw Error("parallel must be >= 1");
  }
};

enum class RecordStatus { Ok, UnknownArchitecture, ConstraintUnsatisfied };
enum class TerminalStatus { Completed, NoImprovementDeclared, AdvisorFailed };

inline std::string_view to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::Ok: return "ok";
    case RecordStatus::UnknownArchitecture: return "unknown_architecture";
    case RecordStatus::ConstraintUnsatisfied: return "constraint_unsatisfied";
  }
  return "?";
}

inline std::string_view to_string(TerminalStatus s) {
  switch (s) {
    case TerminalStatus::Completed: return "completed";
    case TerminalStatus::NoImprovementDeclared: return "no_improvement";
    case TerminalStatus::AdvisorFailed: return "advisor_failed";
  }
  return "?";
}

struct IterationRecord {
  int t = 0;
  RecordStatus status = RecordStatus::Ok;
  std::string key;  // empty when no architecture was accepted
  std::optional<double> val_acc;
  std::optional<double> test_acc;
  std::optional<std::size_t> rank;  // rank of the feedback metric in the benchmark
  std::optional<double> flops_m;
  bool duplicate = false;
  int constraint_retries = 0;
  int parse_retries = 0;
  std::string digest;  // of the raw advisor reply that produced the record

  bool ok() const { return status == RecordStatus::Ok; }
  std::optional<double> metric(Metric m) const {
    if (m == Metric::Test && test_acc) return test_acc;
    return val_acc;
  }
  bool operator==(const IterationRecord&) const = default;
};

struct Trace {
  int trial = 0;
  std::uint64_t seed = 0;
  std::string space;
  std::string benchmark;
  std::vector<IterationRecord> records;
  TerminalStatus status = TerminalStatus::Completed;
  std::string failure;

  bool operator==(const Trace&) const = default;
};

// ---------------------------------------------------------------------------
// Evaluators

struct Evaluation {
  double val_acc = 0.0;
  std::optional<double> test_acc;
  std::optional<double> flops_m;

  double get(Metric m) const { return (m == Metric::Test && test_acc) ? *test_acc : val_acc; }
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual const SearchSpace& space() const = 0;
  // Throws UnknownArchitecture when the architecture cannot be scored.
  virtual Evaluation evaluate(const Architecture& arch) const = 0;
  virtual std::optional<std::size_t> rank(double, Metric) const { return std::nullopt; }
  virtual std::string provenance() const = 0;
};

// Tabular lookup; the benchmark stands in for training.
class BenchmarkEvaluator final : public Evaluator {
 public:
  explicit BenchmarkEvaluator(const BenchmarkTable& table) : table_(&table) {}
  const SearchSpace& space() const override { return table_->space(); }
  Evaluation evaluate(const Architecture& arch) const override {
    const auto& m = table_->lookup(canonical_key(table_->space(), arch));
    return {m.val_acc, m.test_acc, m.flops_m};
  }
  std::optional<std::size_t> rank(double acc, Metric m) const override { return table_->rank_of(acc, m); }
  std::string provenance() const override { return table_->provenance(); }
  const BenchmarkTable& table() const { return *table_; }

 private:
  const BenchmarkTable* table_;
};

// Deterministic stand-in for ImageNet training on the MobileNetV2 space:
// accuracy grows with log FLOPs plus a seeded per-choice bonus.
class SyntheticFlopsEvaluator final : public Evaluator {
 public:
  SyntheticFlopsEvaluator(std::uint64_t seed, flops::StagePlan plan = flops::StagePlan::reported())
      : space_(SearchSpace::mobilenet_v2()), table_(space_, plan), seed_(seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-0.15, 0.15);
    for (auto& slot : bonus_) {
      for (auto& b : slot) b = u(rng);
    }
  }
  const SearchSpace& space() const override { return space_; }
  Evaluation evaluate(const Architecture& arch) const override {
    require_valid(space_, arch);
    const double f = static_cast<double>(table_.total_macs(arch)) / 1e6;
    double acc = 72.0 + 6.0 * std::log2(f / 300.0);
    for (std::size_t i = 0; i < arch.choices.size(); ++i) {
      acc += bonus_[i][static_cast<std::size_t>(arch.choices[i])];
    }
    return {std::round(std::clamp(acc, 0.0, 100.0) * 100.0) / 100.0, std::nullopt, f};
  }
  std::string provenance() const override {
    return "synthetic mobilenetv2 evaluator seed=" + std::to_string(seed_);
  }
  const flops::FlopsTable& flops_table() const { return table_; }

 private:
  SearchSpace space_;
  flops::FlopsTable table_;
  std::uint64_t seed_;
  std::array<std::array<double, mbv2::kChoices>, mbv2::kStages * mbv2::kSlots> bonus_{};
};

// ---------------------------------------------------------------------------
// FLOPs enforcement

struct Enforced {
  std::optional<Architecture> arch;  // empty when the advisor declined during enforcement
  int retries = 0;
  double flops_m = 0.0;
  int parse_retries = 0;
  std::string raw;
};

using FlopsFn = std::function<double(const Architecture&)>;

// Re-prompts with the measured FLOPs until the proposal fits the limit.
// actual > limit is a violation; actual == limit passes.
inline Enforced enforce_flops(AdvisorSession& session, const ArchProposal& proposal, double limit_m,
                              int max_retries, const FlopsFn& flops_of) {
  Enforced out;
  Architecture arch = proposal.arch;
  double f = flops_of(arch);
  while (f > limit_m) {
    if (out.retries >= max_retries) throw ConstraintUnsatisfied(f, limit_m, out.retries);
    ++out.retries;
    auto next = session.propose(flops_violation_prompt(f, limit_m));
    out.parse_retries += next.parse_retries;
    out.raw = next.raw;
    if (std::holds_alternative<NoImprovement>(next.proposal)) {
      out.arch.reset();
      return out;
    }
    arch = std::get<ArchProposal>(next.proposal).arch;
    f = flops_of(arch);
  }
  out.arch = std::move(arch);
  out.flops_m = f;
  return out;
}

// ---------------------------------------------------------------------------
// The search loop

inline Trace run_genius(const Evaluator& evaluator, AdvisorSession& session, const RunConfig& config,
                        int trial = 0, const ProblemOptions& problem = {}) {
  config.check();
  const SearchSpace& space = evaluator.space();
  if (!(space == session.space())) throw Error("session and evaluator disagree on the search space");
  Trace trace;
  trace.trial = trial;
  trace.seed = config.seed + static_cast<std::uint64_t>(trial);
  trace.space = std::string(to_string(space.kind()));
  trace.benchmark = evaluator.provenance();

  std::optional<flops::FlopsTable> table;
  FlopsFn flops_of;
  if (config.flops_limit_m) {
    if (space.kind() != SpaceKind::MobileNetV2) throw Error("a FLOPs limit needs the MobileNetV2 space");
    table.emplace(space, flops::StagePlan::reported(config.flops_resolution));
    flops_of = [&](const Architecture& a) { return static_cast<double>(table->total_macs(a)) / 1e6; };
  }

  ProblemOptions opt = problem;
  opt.flops_limit_m = config.flops_limit_m;
  opt.plan = opt.plan.at_resolution(config.flops_resolution);
  std::string prompt = encode_problem(space, opt);
  std::set<std::string> seen;

  for (int t = 0; t < config.iterations; ++t) {
    IterationRecord rec;
    rec.t = t;
    ProposalResult pr;
    try {
      pr = session.propose(prompt);
    } catch (const Error& e) {
      trace.status = TerminalStatus::AdvisorFailed;
      trace.failure = e.what();
      return trace;
    }
    rec.parse_retries = pr.parse_retries;
    rec.digest = digest(pr.raw);
    if (const auto* ni = std::get_if<NoImprovement>(&pr.proposal)) {
      trace.status = TerminalStatus::NoImprovementDeclared;
      if (ni->from_phrase) trace.failure = "decline detected by phrase fallback";
      return trace;
    }
    Architecture arch = std::get<ArchProposal>(pr.proposal).arch;

    if (config.flops_limit_m) {
      try {
        auto enf = enforce_flops(session, std::get<ArchProposal>(pr.proposal), *config.flops_limit_m,
                                 config.max_constraint_retries, flops_of);
        rec.constraint_retries = enf.retries;
        rec.parse_retries += enf.parse_retries;
        if (!enf.raw.empty()) rec.digest = digest(enf.raw);
        if (!enf.arch) {
          trace.status = TerminalStatus::NoImprovementDeclared;
          return trace;
        }
        arch = *enf.arch;
        rec.flops_m = enf.flops_m;
      } catch (const ConstraintUnsatisfied& e) {
        rec.status = RecordStatus::ConstraintUnsatisfied;
        rec.constraint_retries = e.retries();
        trace.records.push_back(rec);
        prompt = constraint_failed_prompt(*config.flops_limit_m);
        continue;
      } catch (const Error& e) {
        trace.status = TerminalStatus::AdvisorFailed;
        trace.failure = e.what();
        return trace;
      }
    }

    rec.key = canonical_key(space, arch);
    rec.duplicate = !seen.insert(rec.key).second;
    Evaluation ev;
    try {
      ev = evaluator.evaluate(arch);
    } catch (const UnknownArchitecture&) {
      rec.status = RecordStatus::UnknownArchitecture;
      trace.records.push_back(rec);
      prompt = unknown_architecture_prompt(rec.key);
      continue;
    }
    rec.val_acc = ev.val_acc;
    rec.test_acc = ev.test_acc;
    if (!rec.flops_m) rec.flops_m = ev.flops_m;
    const double feedback = ev.get(config.feedback_metric);
    rec.rank = evaluator.rank(feedback, config.feedback_metric);
    trace.records.push_back(rec);
    session.history().add({t, arch, feedback, rec.flops_m, false});
    prompt = feedback_prompt(feedback);
  }
  trace.status = TerminalStatus::Completed;
  return trace;
}

// Builds the advisor for trial i; seed is config.seed + i.
using AdvisorFactory = std::function<std::unique_ptr<Advisor>(int trial, std::uint64_t seed)>;

inline std::vector<Trace> run_trials(const Evaluator& evaluator, const RunConfig& config,
                                     const AdvisorFactory& make_advisor,
                                     const std::function<void(const Trace&)>& on_trial_done = {},
                                     const ProblemOptions& problem = {}) {
  config.check();
  std::vector<Trace> traces(static_cast<std::size_t>(config.trials));
  std::atomic<int> next{0};
  std::mutex done_mu;
  auto worker = [&] {
    for (int i = next++; i < config.trials; i = next++) {
      const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(i);
      Trace tr;
      try {
        SessionOptions so;
        so.flops_limit_m = config.flops_limit_m;
        so.temperature = config.temperature;
        so.parse_retry_budget = config.parse_retry_budget;
        so.context_turns = config.context_turns;
        AdvisorSession session(evaluator.space(), make_advisor(i, seed), so);
        tr = run_genius(evaluator, session, config, i, problem);
      } catch (const std::exception& e) {
        tr = Trace{};
        tr.trial = i;
        tr.seed = seed;
        tr.space = std::string(to_string(evaluator.space().kind()));
        tr.benchmark = evaluator.provenance();
        tr.status = TerminalStatus::AdvisorFailed;
        tr.failure = e.what();
      }
      traces[static_cast<std::size_t>(i)] = tr;
      if (on_trial_done) {
        std::lock_guard lock(done_mu);
        on_trial_done(traces[static_cast<std::size_t>(i)]);
      }
    }
  };
  const int workers = std::min(config.parallel, config.trials);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return traces;
}

// Record with the highest selection metric; earliest iteration wins ties.
inline const IterationRecord& best_of_trace(const Trace& trace, Metric selection) {
  const IterationRecord* best = nullptr;
  for (const auto& r : trace.records) {
    if (!r.ok() || !r.metric(selection)) continue;
    if (!best || *r.metric(selection) > *best->metric(selection)) best = &r;
  }
  if (!best) throw EmptyTrace();
  return *best;
}

// ---------------------------------------------------------------------------
// Random-sampling baseline

struct BaselineResult {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over repeats
  std::vector<double> bests;
};

inline std::vector<double> metric_values(const BenchmarkTable& table, Metric metric) {
  std::vector<double> v;
  v.reserve(table.size());
  for (const auto& [k, m] : table.entries()) v.push_back(m.get(metric));
  return v;
}

// Best of k uniform draws (with replacement) from `values`, repeated r times.
inline BaselineResult random_baseline(std::span<const double> values, int k, int repeats,
                                      std::uint64_t seed) {
  if (values.empty()) throw Error("baseline needs a non-empty table");
  if (k < 1 || repeats < 1) throw Error("baseline needs k >= 1 and repeats >= 1");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  BaselineResult res;
  res.bests.reserve(static_cast<std::size_t>(repeats));
  for (int r = 0; r < repeats; ++r) {
    double best = -1.0;
    for (int i = 0; i < k; ++i) best = std::max(best, values[pick(rng)]);
    res.bests.push_back(best);
  }
  double sum = 0;
  for (double b : res.bests) sum += b;
  res.mean = sum / repeats;
  double ss = 0;
  for (double b : res.bests) ss += (b - res.mean) * (b - res.mean);
  res.std = repeats > 1 ? std::sqrt(ss / (repeats - 1)) : 0.0;
  return res;
}

inline BaselineResult random_baseline(const BenchmarkTable& table, int k, int repeats,
                                      std::uint64_t seed, Metric metric = Metric::Val) {
  const auto v = metric_values(table, metric);
  return random_baseline(std::span<const double>(v), k, repeats, seed);
}

// E[max of k draws] = sum over distinct values a of a * (F(a)^k - F(a-)^k),
// F the empirical CDF. Probabilities are formed from integer counts.
inline double exact_best_of_k_expectation(std::span<const double> values, int k) {
  if (values.empty()) throw Error("expectation of an empty table");
  if (k < 1) throw Error("k must be >= 1");
  std::map<double, std::size_t> counts;
  for (double v : values) ++counts[v];
  const long double n = static_cast<long double>(values.size());
  long double below = 0;  // count of values < a
  long double prev = 0;   // F(a-)^k
  long double e = 0;
  for (const auto& [a, c] : counts) {
    below += static_cast<long double>(c);
    const long double cur = std::pow(below / n, static_cast<long double>(k));
    e += static_cast<long double>(a) * (cur - prev);
    prev = cur;
  }
  return static_cast<double>(e);
}

inline double exact_best_of_k_expectation(const BenchmarkTable& table, int k, Metric metric = Metric::Val) {
  const auto v = metric_values(table, metric);
  return exact_best_of_k_expectation(std::span<const double>(v), k);
}

}  // namespace genius
