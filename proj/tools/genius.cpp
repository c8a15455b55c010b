// SPDX-License-Identifier: Apache-2.0
//
// genius: command-line driver for the architecture-search loop.
//
//   genius search   --space nas-bench-macro --bench macro.jsonl --advisor random --trials 3
//   genius baseline --bench macro.jsonl --k 10 --repeats 10000 --check
//   genius flops    --arch-file samples/genius329.txt
//   genius bench    validate|stats <path>
//
// Exit codes: 0 ok, 2 config error, 3 benchmark error, 4 all trials failed.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "genius/genius.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kBenchError = 3;
constexpr int kAllTrialsFailed = 4;

struct CliConfig {
  std::string space = "nas-bench-macro";
  std::string bench;
  std::string advisor = "random";
  std::string fixture;
  int iterations = 10;
  double temperature = 0.0;
  int trials = 1;
  int parallel = 1;
  std::uint64_t seed = 0;
  double flops_limit_m = 0.0;
  int max_constraint_retries = 5;
  int parse_retry_budget = 3;
  int context_turns = 0;
  int resolution = 224;
  std::string feedback_metric = "val";
  std::string report_metric = "test";
  int proxy_epochs = 20;
  int proxy_input_size = 196;
  std::string out = "genius-out";
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4";
  int timeout_s = 120;
  int max_retries = 3;
  bool record_time = false;
  bool quiet = false;
};

genius::Metric metric_of(const std::string& s) {
  return s == "test" ? genius::Metric::Test : genius::Metric::Val;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw genius::IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string now_iso8601() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int cmd_search(const CliConfig& c) {
  using namespace genius;
  const auto kind = space_kind_from_string(c.space);
  if (!kind) throw ConfigError("unknown --space '" + c.space + "'");
  if (c.bench.empty() && *kind != SpaceKind::MobileNetV2) throw ConfigError("--bench is required for " + c.space);
  if (c.flops_limit_m > 0 && *kind != SpaceKind::MobileNetV2) throw ConfigError("--flops-limit-m requires --space mobilenetv2");
  if (c.advisor == "replay" && c.fixture.empty()) throw ConfigError("--advisor replay requires --fixture");
  const char* key_env = std::getenv(kApiKeyEnv);
  if (c.advisor == "openai" && (!key_env || !*key_env)) {
    throw ConfigError(std::string("--advisor openai requires ") + kApiKeyEnv + " in the environment");
  }

  RunConfig rc;
  rc.iterations = c.iterations;
  rc.temperature = c.temperature;
  rc.trials = c.trials;
  rc.parallel = c.parallel;
  rc.seed = c.seed;
  if (c.flops_limit_m > 0) rc.flops_limit_m = c.flops_limit_m;
  rc.max_constraint_retries = c.max_constraint_retries;
  rc.parse_retry_budget = c.parse_retry_budget;
  rc.context_turns = c.context_turns;
  rc.flops_resolution = c.resolution;
  rc.feedback_metric = metric_of(c.feedback_metric);
  rc.report_metric = metric_of(c.report_metric);
  rc.proxy = {c.proxy_epochs, c.proxy_input_size};
  try {
    rc.check();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  std::optional<BenchmarkTable> table;
  std::unique_ptr<Evaluator> evaluator;
  if (!c.bench.empty()) {
    try {
      table.emplace(load_benchmark(c.bench));
    } catch (const Error& e) {
      std::cerr << "benchmark error: " << e.what() << "\n";
      return kBenchError;
    }
    if (table->space().kind() != *kind) {
      std::cerr << "benchmark error: file holds a " << to_string(table->space().kind())
                << " table, --space is " << c.space << "\n";
      return kBenchError;
    }
    evaluator = std::make_unique<BenchmarkEvaluator>(*table);
  } else {
    evaluator = std::make_unique<SyntheticFlopsEvaluator>(c.seed, flops::StagePlan::reported(c.resolution));
  }
  const SearchSpace& space = evaluator->space();

  std::vector<Architecture> fixture;
  if (c.advisor == "replay") {
    std::ifstream in(c.fixture);
    if (!in) throw ConfigError("cannot open --fixture '" + c.fixture + "'");
    try {
      fixture = parse_replay_fixture(space, in);
    } catch (const Error& e) {
      throw ConfigError(std::string("bad fixture: ") + e.what());
    }
  }
  std::shared_ptr<ChatClient> chat;
  if (c.advisor == "openai") {
    ChatConfig cc;
    cc.base_url = c.base_url;
    cc.model = c.model;
    cc.api_key = key_env;
    cc.timeout = std::chrono::seconds(c.timeout_s);
    cc.max_retries = c.max_retries;
    chat = std::make_shared<OpenAiChatClient>(cc);
  }
  AdvisorFactory factory = [&](int, std::uint64_t seed) -> std::unique_ptr<Advisor> {
    if (c.advisor == "random") return std::make_unique<RandomAdvisor>(seed);
    if (c.advisor == "hillclimb") return std::make_unique<HillClimbAdvisor>(seed);
    if (c.advisor == "replay") return std::make_unique<ReplayAdvisor>(fixture);
    return std::make_unique<LlmAdvisor>(chat);
  };

  std::filesystem::create_directories(c.out);
  const auto out = std::filesystem::path(c.out);
  auto meta = run_metadata(rc, space, c.advisor, evaluator->provenance(),
                           c.record_time ? std::optional<std::string>(now_iso8601()) : std::nullopt);
  LogSink sink(meta, (out / "log.jsonl").string());
  ProblemOptions problem;
  if (*kind == SpaceKind::MobileNetV2) problem.dataset = "ImageNet";
  auto traces = run_trials(*evaluator, rc, factory, [&](const Trace& t) {
    sink.append(t);
    if (!c.quiet) {
      std::cerr << "trial " << t.trial << ": " << to_string(t.status) << ", " << t.records.size()
                << " records" << (t.failure.empty() ? "" : " (" + t.failure + ")") << "\n";
    }
  }, problem);

  const auto log = sink.snapshot();
  const auto summary = summary_table(log, table ? &*table : nullptr);
  write_text_atomic((out / "summary.csv").string(), summary.csv());
  write_text_atomic((out / "accuracy.csv").string(), export_plot_csv(log, PlotKind::AccuracyVsIter));
  write_text_atomic((out / "rank.csv").string(), export_plot_csv(log, PlotKind::RankVsIter));
  if (!c.quiet) std::cout << summary.text();

  for (const auto& t : traces) {
    if (t.status != TerminalStatus::AdvisorFailed) return kOk;
  }
  return kAllTrialsFailed;
}

struct BaselineOptions {
  std::string bench;
  int k = 10;
  int repeats = 10'000;
  std::uint64_t seed = 0;
  std::string metric = "val";
  bool check = false;
};

int cmd_baseline(const BaselineOptions& o) {
  using namespace genius;
  if (o.k < 1 || o.repeats < 1) throw ConfigError("--k and --repeats must be >= 1");
  std::optional<BenchmarkTable> table;
  try {
    table.emplace(load_benchmark(o.bench));
  } catch (const Error& e) {
    std::cerr << "benchmark error: " << e.what() << "\n";
    return kBenchError;
  }
  const auto m = metric_of(o.metric);
  const auto emp = random_baseline(*table, o.k, o.repeats, o.seed, m);
  const double exact = exact_best_of_k_expectation(*table, o.k, m);
  const double se = emp.std / std::sqrt(static_cast<double>(o.repeats));
  const double gap = std::abs(emp.mean - exact);
  std::cout << "entries        " << table->size() << "\n"
            << "k              " << o.k << "\n"
            << "repeats        " << o.repeats << "\n"
            << "empirical mean " << format_fixed(emp.mean, 4) << "\n"
            << "empirical std  " << format_fixed(emp.std, 4) << "\n"
            << "exact          " << format_fixed(exact, 4) << "\n"
            << "gap            " << format_fixed(gap, 4) << " (3 sigma = " << format_fixed(3 * se, 4) << ")\n";
  if (o.check) {
    const bool ok = gap <= 3 * se || (se == 0.0 && gap < 1e-9);
    std::cout << (ok ? "CHECK OK" : "CHECK FAILED") << "\n";
    return ok ? kOk : 1;
  }
  return kOk;
}

struct FlopsOptions {
  std::string key;
  std::string arch_file;
  int resolution = 224;
  std::string plan = "reported";
  bool table = false;
};

int cmd_flops(const FlopsOptions& o) {
  using namespace genius;
  if (o.key.empty() == o.arch_file.empty()) throw ConfigError("give exactly one of --key or --arch-file");
  if (o.plan != "reported" && o.plan != "tabulated") throw ConfigError("--plan must be reported or tabulated");
  const auto space = SearchSpace::mobilenet_v2();
  Architecture arch;
  try {
    if (!o.key.empty()) {
      arch = parse_key(space, o.key);
    } else {
      const std::string text = read_file(o.arch_file);
      if (text.find("InvertedResidual") != std::string::npos || text.find('#') != std::string::npos) {
        arch = parse_mobilenet_listing(text);
      } else {
        std::string k = text;
        k.erase(k.find_last_not_of(" \t\r\n") + 1);
        arch = parse_key(space, k);
      }
    }
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const auto plan = (o.plan == "reported" ? flops::StagePlan::reported() : flops::StagePlan::tabulated())
                        .at_resolution(o.resolution);
  const auto b = flops::flops_breakdown(space, arch, plan);
  std::cout << "key      " << canonical_key(space, arch) << "\n"
            << "plan     " << o.plan << " @ " << o.resolution << "x" << o.resolution << "\n"
            << "stem     " << format_fixed(b.stem / 1e6, 3) << " M\n";
  for (std::size_t s = 0; s < b.stages.size(); ++s) {
    std::cout << "stage " << s << "  " << format_fixed(b.stages[s] / 1e6, 3) << " M\n";
  }
  std::cout << "head     " << format_fixed(b.head / 1e6, 3) << " M\n"
            << "total    " << format_fixed(b.total_m(), 3) << " M\n"
            << "params   " << format_fixed(flops::total_params_m(space, arch, plan), 3) << " M\n";
  if (o.table) std::cout << flops::build_flops_table(space, plan).to_json(space).dump(2) << "\n";
  return kOk;
}

int cmd_bench(const std::string& action, const std::string& path, const std::string& metric) {
  using namespace genius;
  try {
    const auto table = load_benchmark(path);
    if (action == "validate") {
      std::cout << "OK " << table.size() << " entries\n";
      return kOk;
    }
    const auto s = bench_stats(table, metric_of(metric));
    std::cout << "space    " << to_string(table.space().kind()) << "\n"
              << "entries  " << s.count << "\n"
              << "min      " << format_fixed(s.min) << "\n"
              << "max      " << format_fixed(s.max) << "\n"
              << "mean     " << format_fixed(s.mean, 4) << "\n"
              << "optimum  " << s.optimum_key << "\n";
    return kOk;
  } catch (const Error& e) {
    std::cerr << "benchmark error: " << e.what() << "\n";
    return kBenchError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-box neural architecture search with an advisor in the loop"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(genius::kVersion));

  CliConfig sc;
  auto* search = app.add_subcommand("search", "Run the iterative search loop");
  search->add_option("--space", sc.space, "nas-bench-macro | channel-bench-macro | nas-bench-201 | mobilenetv2")
      ->check(CLI::IsMember({"nas-bench-macro", "channel-bench-macro", "nas-bench-201", "mobilenetv2"}))
      ->capture_default_str();
  search->add_option("--bench", sc.bench, "Benchmark JSONL (required except for mobilenetv2)");
  search->add_option("--advisor", sc.advisor, "openai | random | hillclimb | replay")
      ->check(CLI::IsMember({"openai", "random", "hillclimb", "replay"}))
      ->capture_default_str();
  search->add_option("--fixture", sc.fixture, "Replay fixture JSONL of {\"key\": ...} lines");
  search->add_option("--iterations", sc.iterations, "Iterations per trial")->capture_default_str();
  search->add_option("--temperature", sc.temperature, "Advisor sampling temperature")->capture_default_str();
  search->add_option("--trials", sc.trials, "Independent trials (seeds seed+i)")->capture_default_str();
  search->add_option("--parallel", sc.parallel, "Trials run concurrently")->capture_default_str();
  search->add_option("--seed", sc.seed, "Base seed")->capture_default_str();
  search->add_option("--flops-limit-m", sc.flops_limit_m, "FLOPs budget in M multiply-adds (mobilenetv2)");
  search->add_option("--max-constraint-retries", sc.max_constraint_retries, "FLOPs re-proposals per iteration")
      ->capture_default_str();
  search->add_option("--parse-retries", sc.parse_retry_budget, "Corrective re-queries on invalid replies")
      ->capture_default_str();
  search->add_option("--context-turns", sc.context_turns, "Send only the last N exchanges (0 = all)")
      ->capture_default_str();
  search->add_option("--resolution", sc.resolution, "Input size of the FLOPs look-up table")->capture_default_str();
  search->add_option("--feedback-metric", sc.feedback_metric, "Metric fed back to the advisor")
      ->check(CLI::IsMember({"val", "test"}))
      ->capture_default_str();
  search->add_option("--report-metric", sc.report_metric, "Metric reported for the best record")
      ->check(CLI::IsMember({"val", "test"}))
      ->capture_default_str();
  search->add_option("--proxy-epochs", sc.proxy_epochs, "Recorded proxy-training epochs (metadata)")
      ->capture_default_str();
  search->add_option("--proxy-input-size", sc.proxy_input_size, "Recorded proxy-training input size (metadata)")
      ->capture_default_str();
  search->add_option("--out", sc.out, "Output directory")->capture_default_str();
  search->add_option("--base-url", sc.base_url, "Chat-completions base URL")->capture_default_str();
  search->add_option("--model", sc.model, "Chat model name")->capture_default_str();
  search->add_option("--timeout", sc.timeout_s, "Request timeout in seconds")->capture_default_str();
  search->add_option("--max-retries", sc.max_retries, "Transport retries per request")->capture_default_str();
  search->add_flag("--record-time", sc.record_time, "Write the start time into the log header");
  search->add_flag("--quiet", sc.quiet, "Do not print the summary");

  BaselineOptions bo;
  auto* baseline = app.add_subcommand("baseline", "Best-of-k random sampling baseline");
  baseline->add_option("--bench", bo.bench, "Benchmark JSONL")->required();
  baseline->add_option("--k", bo.k, "Samples per repeat")->capture_default_str();
  baseline->add_option("--repeats", bo.repeats, "Repeats")->capture_default_str();
  baseline->add_option("--seed", bo.seed, "Seed")->capture_default_str();
  baseline->add_option("--metric", bo.metric, "val | test")->check(CLI::IsMember({"val", "test"}))->capture_default_str();
  baseline->add_flag("--check", bo.check, "Fail unless |empirical - exact| <= 3 standard errors");

  FlopsOptions fo;
  auto* fl = app.add_subcommand("flops", "FLOPs of a MobileNetV2 architecture");
  fl->add_option("--key", fo.key, "Canonical key");
  fl->add_option("--arch-file", fo.arch_file, "File with a key or an InvertedResidual listing");
  fl->add_option("--resolution", fo.resolution, "Input resolution")->capture_default_str();
  fl->add_option("--plan", fo.plan, "reported | tabulated")->capture_default_str();
  fl->add_flag("--table", fo.table, "Also print the FLOPs look-up table JSON");

  std::string bench_action, bench_path, bench_metric = "val";
  auto* bench = app.add_subcommand("bench", "Inspect a benchmark file");
  bench->add_option("action", bench_action, "validate | stats")->required()->check(CLI::IsMember({"validate", "stats"}));
  bench->add_option("path", bench_path, "Benchmark JSONL")->required();
  bench->add_option("--metric", bench_metric, "val | test")->check(CLI::IsMember({"val", "test"}))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kConfigError;
  }

  try {
    if (*search) return cmd_search(sc);
    if (*baseline) return cmd_baseline(bo);
    if (*fl) return cmd_flops(fo);
    if (*bench) return cmd_bench(bench_action, bench_path, bench_metric);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kConfigError;
}
