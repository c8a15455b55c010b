// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genius/bench.hpp"
#include "genius/engine.hpp"
#include "genius/error.hpp"

namespace genius {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentLog {
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
  std::vector<Trace> traces;

  bool operator==(const ExperimentLog& o) const {
    return metadata.dump() == o.metadata.dump() && traces == o.traces;
  }
};

inline nlohmann::ordered_json run_metadata(const RunConfig& c, const SearchSpace& space,
                                           const std::string& advisor, const std::string& benchmark,
                                           std::optional<std::string> started_at = std::nullopt) {
  nlohmann::ordered_json m;
  m["version"] = kVersion;
  m["space"] = std::string(to_string(space.kind()));
  if (!space.base_model().empty()) m["base_model"] = space.base_model();
  m["benchmark"] = benchmark;
  m["advisor"] = advisor;
  nlohmann::ordered_json cfg;
  cfg["iterations"] = c.iterations;
  cfg["temperature"] = c.temperature;
  cfg["trials"] = c.trials;
  cfg["seed"] = c.seed;
  cfg["flops_limit_m"] = c.flops_limit_m ? nlohmann::ordered_json(*c.flops_limit_m) : nlohmann::ordered_json(nullptr);
  cfg["flops_resolution"] = c.flops_resolution;
  cfg["max_constraint_retries"] = c.max_constraint_retries;
  cfg["parse_retry_budget"] = c.parse_retry_budget;
  cfg["context_turns"] = c.context_turns;
  cfg["feedback_metric"] = std::string(to_string(c.feedback_metric));
  cfg["report_metric"] = std::string(to_string(c.report_metric));
  cfg["proxy_epochs"] = c.proxy.epochs;
  cfg["proxy_input_size"] = c.proxy.input_size;
  m["config"] = std::move(cfg);
  if (started_at) m["started_at"] = *started_at;
  return m;
}

// ---------------------------------------------------------------------------
// JSONL trace log: one header line ({"metadata", "traces": [per-trial summary]})
// followed by one line per IterationRecord.

namespace detail {

template <class T>
nlohmann::ordered_json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

template <class T, class Json>
std::optional<T> json_opt(const Json& j, const char* f) {
  auto it = j.find(f);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->template get<T>();
}

}  // namespace detail

inline std::string to_jsonl(const ExperimentLog& log) {
  auto traces = log.traces;
  std::stable_sort(traces.begin(), traces.end(), [](const Trace& a, const Trace& b) { return a.trial < b.trial; });
  nlohmann::ordered_json header;
  header["metadata"] = log.metadata;
  auto summary = nlohmann::ordered_json::array();
  for (const auto& t : traces) {
    nlohmann::ordered_json s;
    s["trial"] = t.trial;
    s["seed"] = t.seed;
    s["space"] = t.space;
    s["benchmark"] = t.benchmark;
    s["status"] = std::string(to_string(t.status));
    s["records"] = t.records.size();
    s["failure"] = t.failure;
    summary.push_back(std::move(s));
  }
  header["traces"] = std::move(summary);
  std::string out = header.dump() + "\n";
  for (const auto& t : traces) {
    for (const auto& r : t.records) {
      nlohmann::ordered_json j;
      j["trial"] = t.trial;
      j["t"] = r.t;
      j["status"] = std::string(to_string(r.status));
      j["key"] = r.key;
      j["val_acc"] = detail::opt_json(r.val_acc);
      j["test_acc"] = detail::opt_json(r.test_acc);
      j["rank"] = detail::opt_json(r.rank);
      j["flops_m"] = detail::opt_json(r.flops_m);
      j["duplicate"] = r.duplicate;
      j["constraint_retries"] = r.constraint_retries;
      j["parse_retries"] = r.parse_retries;
      j["digest"] = r.digest;
      out += j.dump() + "\n";
    }
  }
  return out;
}

inline void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

inline void write_trace_jsonl(const ExperimentLog& log, const std::string& path) {
  write_text_atomic(path, to_jsonl(log));
}

namespace detail {

inline RecordStatus record_status_from(const std::string& s, std::size_t line) {
  for (auto st : {RecordStatus::Ok, RecordStatus::UnknownArchitecture, RecordStatus::ConstraintUnsatisfied}) {
    if (to_string(st) == s) return st;
  }
  throw FormatError(line, "unknown record status '" + s + "'");
}

inline TerminalStatus terminal_status_from(const std::string& s, std::size_t line) {
  for (auto st : {TerminalStatus::Completed, TerminalStatus::NoImprovementDeclared, TerminalStatus::AdvisorFailed}) {
    if (to_string(st) == s) return st;
  }
  throw FormatError(line, "unknown trial status '" + s + "'");
}

}  // namespace detail

inline ExperimentLog parse_trace_jsonl(std::istream& in) {
  ExperimentLog log;
  std::string text;
  std::size_t line = 0;
  std::map<int, std::size_t> by_trial;
  bool have_header = false;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    auto j = nlohmann::ordered_json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw FormatError(line, "invalid JSON");
    try {
      if (!have_header) {
        log.metadata = j.at("metadata");
        for (const auto& s : j.at("traces")) {
          Trace t;
          t.trial = s.at("trial").get<int>();
          t.seed = s.at("seed").get<std::uint64_t>();
          t.space = s.at("space").get<std::string>();
          t.benchmark = s.at("benchmark").get<std::string>();
          t.status = detail::terminal_status_from(s.at("status").get<std::string>(), line);
          t.failure = s.at("failure").get<std::string>();
          by_trial[t.trial] = log.traces.size();
          log.traces.push_back(std::move(t));
        }
        have_header = true;
        continue;
      }
      const int trial = j.at("trial").get<int>();
      auto it = by_trial.find(trial);
      if (it == by_trial.end()) throw FormatError(line, "record of unknown trial " + std::to_string(trial));
      IterationRecord r;
      r.t = j.at("t").get<int>();
      r.status = detail::record_status_from(j.at("status").get<std::string>(), line);
      r.key = j.at("key").get<std::string>();
      r.val_acc = detail::json_opt<double>(j, "val_acc");
      r.test_acc = detail::json_opt<double>(j, "test_acc");
      r.rank = detail::json_opt<std::size_t>(j, "rank");
      r.flops_m = detail::json_opt<double>(j, "flops_m");
      r.duplicate = j.at("duplicate").get<bool>();
      r.constraint_retries = j.at("constraint_retries").get<int>();
      r.parse_retries = j.at("parse_retries").get<int>();
      r.digest = j.at("digest").get<std::string>();
      log.traces[it->second].records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(line, e.what());
    }
  }
  if (!have_header) throw FormatError(line + 1, "missing header line");
  return log;
}

inline ExperimentLog read_trace_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_trace_jsonl(in);
}

// Collects traces from concurrent trials and rewrites the log after each one.
class LogSink {
 public:
  LogSink(nlohmann::ordered_json metadata, std::string path) : path_(std::move(path)) {
    log_.metadata = std::move(metadata);
    write_trace_jsonl(log_, path_);
  }
  void append(const Trace& t) {
    std::lock_guard lock(mu_);
    log_.traces.push_back(t);
    write_trace_jsonl(log_, path_);
  }
  ExperimentLog snapshot() const {
    std::lock_guard lock(mu_);
    return log_;
  }

 private:
  mutable std::mutex mu_;
  ExperimentLog log_;
  std::string path_;
};

// ---------------------------------------------------------------------------
// Summary table: per trial an accuracy row and a ranking row over T0..T(n-1),
// then the best record and the benchmark optimum. '-' marks iterations after
// the advisor declared no improvement (or the trial stopped); 'x' marks failed
// iterations.

struct SummaryTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
      out += "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }

  std::string text() const {
    std::vector<std::size_t> w(header.size(), 0);
    auto widen = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) w[i] = std::max(w[i], cells[i].size());
    };
    widen(header);
    for (const auto& r : rows) widen(r);
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += "  ";
        out += cells[i] + std::string(w[i] - cells[i].size(), ' ');
      }
      while (!out.empty() && out.back() == ' ') out.pop_back();
      out += "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
};

inline Metric metadata_metric(const ExperimentLog& log, const char* field, Metric fallback) {
  if (log.metadata.contains("config") && log.metadata["config"].contains(field)) {
    return log.metadata["config"][field].get<std::string>() == "test" ? Metric::Test : Metric::Val;
  }
  return fallback;
}

inline int metadata_iterations(const ExperimentLog& log) {
  int n = 0;
  if (log.metadata.contains("config") && log.metadata["config"].contains("iterations")) {
    n = log.metadata["config"]["iterations"].get<int>();
  }
  for (const auto& t : log.traces) {
    for (const auto& r : t.records) n = std::max(n, r.t + 1);
  }
  return n;
}

// `table` supplies the optimum column and best-record rank; pass nullptr for
// evaluators without a table.
inline SummaryTable summary_table(const ExperimentLog& log, const BenchmarkTable* table) {
  for (const auto& t : log.traces) {
    if (t.space != log.traces.front().space || t.benchmark != log.traces.front().benchmark) {
      throw MixedRuns("traces come from different spaces or benchmarks");
    }
  }
  const Metric select = metadata_metric(log, "feedback_metric", Metric::Val);
  const Metric report = metadata_metric(log, "report_metric", Metric::Test);
  const int n = metadata_iterations(log);
  SummaryTable s;
  s.header = {"trial", "row"};
  for (int t = 0; t < n; ++t) s.header.push_back("T" + std::to_string(t));
  s.header.insert(s.header.end(), {"best", "optimal"});

  std::optional<std::pair<std::string, Metrics>> opt;
  if (table && !table->empty()) opt = table->optimum(report);

  auto traces = log.traces;
  std::stable_sort(traces.begin(), traces.end(), [](const Trace& a, const Trace& b) { return a.trial < b.trial; });
  for (const auto& tr : traces) {
    std::vector<std::string> acc{std::to_string(tr.trial), "acc"};
    std::vector<std::string> rank{std::to_string(tr.trial), "rank"};
    for (int t = 0; t < n; ++t) {
      auto it = std::find_if(tr.records.begin(), tr.records.end(), [&](const IterationRecord& r) { return r.t == t; });
      if (it == tr.records.end()) {
        acc.push_back("-");
        rank.push_back("-");
      } else if (!it->ok()) {
        acc.push_back("x");
        rank.push_back("x");
      } else {
        acc.push_back(format_fixed(*it->metric(select)));
        rank.push_back(it->rank ? std::to_string(*it->rank) : "n/a");
      }
    }
    try {
      const auto& best = best_of_trace(tr, select);
      const double v = *best.metric(report);
      acc.push_back(format_fixed(v));
      rank.push_back(table ? std::to_string(table->rank_of(v, report)) : "n/a");
    } catch (const EmptyTrace&) {
      acc.push_back("-");
      rank.push_back("-");
    }
    acc.push_back(opt ? format_fixed(opt->second.get(report)) : "n/a");
    rank.push_back(opt ? "1" : "n/a");
    s.rows.push_back(std::move(acc));
    s.rows.push_back(std::move(rank));
  }
  return s;
}

enum class PlotKind { AccuracyVsIter, RankVsIter };

// Long-format CSV: trial,iteration,value. Only successful iterations appear.
inline std::string export_plot_csv(const ExperimentLog& log, PlotKind kind) {
  const Metric select = metadata_metric(log, "feedback_metric", Metric::Val);
  std::string out = "trial,iteration,value\n";
  auto traces = log.traces;
  std::stable_sort(traces.begin(), traces.end(), [](const Trace& a, const Trace& b) { return a.trial < b.trial; });
  for (const auto& tr : traces) {
    for (const auto& r : tr.records) {
      if (!r.ok()) continue;
      std::string v;
      if (kind == PlotKind::AccuracyVsIter) {
        v = format_fixed(*r.metric(select));
      } else {
        if (!r.rank) continue;
        v = std::to_string(*r.rank);
      }
      out += std::to_string(tr.trial) + "," + std::to_string(r.t) + "," + v + "\n";
    }
  }
  return out;
}

}  // namespace genius
