// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "genius/error.hpp"
#include "genius/flops.hpp"
#include "genius/space.hpp"

namespace genius {

inline std::string format_fixed(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

// FNV-1a, 64 bit, as 16 hex digits.
inline std::string digest(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Message {
  std::string role;  // "user" | "assistant" | "system"
  std::string content;

  bool operator==(const Message&) const = default;
};

struct HistoryRecord {
  int iteration = 0;
  Architecture arch;
  double accuracy = 0.0;
  std::optional<double> flops_m;
  bool violation = false;
};

class History {
 public:
  void add(HistoryRecord r) {
    if (!records_.empty() && r.iteration <= records_.back().iteration) {
      throw Error("history iterations must be strictly increasing");
    }
    if (records_.empty() && r.iteration < 0) throw Error("history iterations start at 0");
    records_.push_back(std::move(r));
  }
  const std::vector<HistoryRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }

  // Highest-accuracy non-violating record; earliest wins ties.
  const HistoryRecord* best() const {
    const HistoryRecord* b = nullptr;
    for (const auto& r : records_) {
      if (r.violation) continue;
      if (!b || r.accuracy > b->accuracy) b = &r;
    }
    return b;
  }

 private:
  std::vector<HistoryRecord> records_;
};

struct ArchProposal {
  Architecture arch;
  std::string rationale;
};

struct NoImprovement {
  std::string text;
  bool from_phrase = false;  // detected by the prose fallback, not the JSON flag
};

using Proposal = std::variant<ArchProposal, NoImprovement>;

// ---------------------------------------------------------------------------
// Prompts

struct ProblemOptions {
  std::optional<double> flops_limit_m;
  flops::StagePlan plan = flops::StagePlan::reported();
  std::string dataset = "CIFAR-10";
  std::string metric = "accuracy";
};

inline std::string response_format_instruction(const SearchSpace& space) {
  std::ostringstream o;
  o << "Response format: reply with exactly one fenced JSON code block of the form\n"
    << "```json\n{\"arch\": [";
  for (std::size_t i = 0; i < space.size(); ++i) o << (i ? ", " : "") << "<index>";
  o << "], \"rationale\": \"<why this model should outperform the previous ones>\"}\n```\n"
    << "where \"arch\" lists one candidate index per position, in position order. "
    << "If you are certain no architecture can improve on the results so far, reply with "
    << "```json\n{\"no_improvement\": true, \"rationale\": \"<why>\"}\n```\n";
  return o.str();
}

inline std::string encode_problem(const SearchSpace& space, const ProblemOptions& opt = {}) {
  std::ostringstream o;
  o << "You are an expert in neural architecture search. Your task is to design a neural network "
       "architecture from a fixed discrete search space that maximizes "
    << opt.metric << " on " << opt.dataset << ".\n\n";
  o << "Search space: " << space.name();
  if (!space.base_model().empty()) o << " (base model: " << space.base_model() << ")";
  o << ", " << space.size() << " searchable positions";
  switch (space.kind()) {
    case SpaceKind::MacroOps:
      o << " (" << space.size() << " sequential layers; each layer is one of the candidate blocks).\n";
      break;
    case SpaceKind::ChannelWidths:
      o << " (" << space.size() << " sequential layers; each layer chooses its number of output channels).\n";
      break;
    case SpaceKind::CellDag:
      o << " (the 6 edges of a densely connected cell DAG with 4 nodes; node 0 is the cell input, "
           "node 3 the cell output; each edge applies one operation and each node sums its inputs).\n";
      break;
    case SpaceKind::MobileNetV2:
      o << " (" << mbv2::kStages << " stages x " << mbv2::kSlots
        << " layer slots of a MobileNetV2-style network; \"skip\" removes a layer, so within a stage "
           "all skip slots must come after the active layers).\n";
      break;
  }
  o << "Total number of architectures: " << space_cardinality(space).str() << ".\n\n";
  if (space.kind() == SpaceKind::MobileNetV2) {
    o << "Every slot has the same candidates:\n";
    const auto& cands = space.positions()[0].candidates;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      o << "  " << c << ": " << cands[c].name << " - " << cands[c].description << "\n";
    }
    const auto shapes = flops::slot_shapes(opt.plan);
    o << "Stages (first slot stride, output channels):\n";
    for (std::size_t s = 0; s < mbv2::kStages; ++s) {
      o << "  stage " << s << ": input " << shapes[s][0].hw << "x" << shapes[s][0].hw << "x"
        << shapes[s][0].in_channels << ", output channels " << opt.plan.groups[s].channels
        << ", stride " << opt.plan.groups[s].stride << ", slots " << s * mbv2::kSlots << ".."
        << s * mbv2::kSlots + mbv2::kSlots - 1 << "\n";
    }
  } else {
    for (const auto& p : space.positions()) {
      o << "Position " << p.index << " (" << p.label << "):";
      for (std::size_t c = 0; c < p.candidates.size(); ++c) {
        o << (c ? "," : "") << " " << c << " = " << p.candidates[c].name << " ("
          << p.candidates[c].description << ")";
      }
      o << "\n";
    }
  }
  o << "\nObjective: propose the architecture with the highest " << opt.metric
    << ". After each proposal you will be told the " << opt.metric
    << " it achieved; use all previous results to propose better architectures.\n";
  if (opt.flops_limit_m) {
    o << "\nConstraint: the total FLOPs (multiply-adds) of the network must not exceed "
      << format_fixed(*opt.flops_limit_m) << "M. FLOPs look-up table (millions of multiply-adds "
      << "per stage, slot and candidate index; total = fixed_m + sum of the selected entries):\n";
    if (space.kind() == SpaceKind::MobileNetV2) {
      o << "```json\n" << flops::build_flops_table(space, opt.plan).to_json(space).dump() << "\n```\n";
    }
  }
  o << "\n" << response_format_instruction(space);
  return o.str();
}

inline std::string feedback_prompt(double accuracy) {
  return "By using this model, we achieved an accuracy of " + format_fixed(accuracy) +
         "%. Please recommend a new model that outperforms prior architectures based on the "
         "abovementioned experiments. Also, Please provide a rationale explaining why the suggested "
         "model surpasses all previous architectures.";
}

inline std::string flops_violation_prompt(double actual_m, double limit_m) {
  return "The suggested model requires " + format_fixed(actual_m) +
         "M FLOPs, which exceeds the limit of " + format_fixed(limit_m) +
         "M FLOPs. Please revise the model so that its total FLOPs do not exceed " +
         format_fixed(limit_m) +
         "M, using the FLOPs look-up table, and reply in the same JSON format.";
}

inline std::string corrective_prompt(std::string_view reason) {
  return "Your last reply was not valid (" + std::string(reason) +
         "). Respond with only the JSON object in the requested format.";
}

inline std::string unknown_architecture_prompt(const std::string& key) {
  return "The suggested model (" + key +
         ") could not be evaluated because it is not part of the benchmark. Please recommend a "
         "different model from the search space, in the same JSON format.";
}

inline std::string constraint_failed_prompt(double limit_m) {
  return "No model within the FLOPs limit of " + format_fixed(limit_m) +
         "M was obtained in this round. Please recommend a new model that respects the limit and "
         "outperforms prior architectures, in the same JSON format.";
}

// Fenced JSON reply as produced by the mock advisors.
inline std::string format_reply(const Architecture& arch, std::string_view rationale) {
  nlohmann::ordered_json j;
  j["arch"] = arch.choices;
  j["rationale"] = rationale;
  return "```json\n" + j.dump() + "\n```";
}

inline std::string format_no_improvement(std::string_view rationale) {
  nlohmann::ordered_json j;
  j["no_improvement"] = true;
  j["rationale"] = rationale;
  return "```json\n" + j.dump() + "\n```";
}

// ---------------------------------------------------------------------------
// Response parsing

namespace detail {

// Body of the last ``` fenced block, language tag stripped.
inline std::optional<std::string> last_fenced_block(std::string_view text) {
  std::optional<std::string> last;
  std::size_t pos = 0;
  while (true) {
    auto open = text.find("```", pos);
    if (open == std::string_view::npos) break;
    auto body = text.find('\n', open + 3);
    if (body == std::string_view::npos) break;
    auto close = text.find("```", body + 1);
    if (close == std::string_view::npos) break;
    last = std::string(text.substr(body + 1, close - body - 1));
    pos = close + 3;
  }
  return last;
}

// Last balanced {...} in free text that parses as a JSON object.
inline std::optional<nlohmann::json> last_json_object(std::string_view text) {
  for (std::size_t end = text.rfind('}'); end != std::string_view::npos;
       end = end == 0 ? std::string_view::npos : text.rfind('}', end - 1)) {
    int depth = 0;
    for (std::size_t i = end + 1; i-- > 0;) {
      if (text[i] == '}') ++depth;
      if (text[i] == '{' && --depth == 0) {
        auto j = nlohmann::json::parse(text.substr(i, end - i + 1), nullptr, false);
        if (!j.is_discarded() && j.is_object()) return j;
        break;
      }
    }
  }
  return std::nullopt;
}

inline std::string lower(std::string_view s) {
  std::string o(s);
  for (auto& c : o) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return o;
}

inline constexpr std::string_view kDeclinePhrases[] = {
    "no chance to improve", "cannot be improved", "can't be improved", "no further improvement",
    "unable to improve", "already optimal", "cannot improve further", "not possible to improve"};

}  // namespace detail

inline Proposal parse_proposal(const SearchSpace& space, std::string_view text) {
  const std::string raw(text);
  std::optional<nlohmann::json> j;
  if (auto block = detail::last_fenced_block(text)) {
    auto parsed = nlohmann::json::parse(*block, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
      throw ParseError("last fenced block is not a JSON object", raw);
    }
    j = std::move(parsed);
  } else {
    j = detail::last_json_object(text);
  }
  if (!j) {
    const auto l = detail::lower(text);
    for (auto phrase : detail::kDeclinePhrases) {
      if (l.find(phrase) != std::string::npos) return NoImprovement{raw, true};
    }
    throw ParseError("no JSON object in reply", raw);
  }
  if (auto it = j->find("no_improvement"); it != j->end() && it->is_boolean() && it->get<bool>()) {
    return NoImprovement{j->value("rationale", raw), false};
  }
  auto it = j->find("arch");
  if (it == j->end()) throw ParseError("JSON object has no \"arch\" field", raw);
  Architecture arch{space.kind(), {}};
  if (it->is_string()) {
    try {
      arch = parse_key(space, it->get<std::string>());
    } catch (const KeyParseError& e) {
      throw InvalidArchitecture(e.what(), raw);
    }
  } else if (it->is_array()) {
    for (const auto& v : *it) {
      if (!v.is_number_integer()) throw InvalidArchitecture("\"arch\" entries must be integers", raw);
      arch.choices.push_back(v.get<int>());
    }
  } else {
    throw ParseError("\"arch\" must be an array of indices", raw);
  }
  auto violations = validate(space, arch);
  if (!violations.empty()) {
    std::string msg = "invalid architecture:";
    for (const auto& v : violations) msg += " " + v + ";";
    throw InvalidArchitecture(msg, raw);
  }
  std::string rationale;
  if (auto r = j->find("rationale"); r != j->end() && r->is_string()) rationale = r->get<std::string>();
  return ArchProposal{std::move(arch), std::move(rationale)};
}

// ---------------------------------------------------------------------------
// Session and backends

class AdvisorSession;

class Advisor {
 public:
  virtual ~Advisor() = default;
  virtual std::string tag() const = 0;
  // Raw reply to the session's current transcript.
  virtual std::string respond(const AdvisorSession& session) = 0;
};

struct ProposalResult {
  Proposal proposal;
  std::string raw;
  int parse_retries = 0;
};

struct SessionOptions {
  std::optional<double> flops_limit_m;
  double temperature = 0.0;
  int parse_retry_budget = 3;
  // 0 keeps the full transcript; N sends the encoding plus the last N exchanges.
  int context_turns = 0;
};

class AdvisorSession {
 public:
  AdvisorSession(SearchSpace space, std::unique_ptr<Advisor> advisor, SessionOptions opt = {})
      : space_(std::move(space)), advisor_(std::move(advisor)), opt_(opt) {
    if (!advisor_) throw Error("session needs an advisor backend");
  }

  const SearchSpace& space() const { return space_; }
  const SessionOptions& options() const { return opt_; }
  double temperature() const { return opt_.temperature; }
  std::optional<double> flops_limit_m() const { return opt_.flops_limit_m; }
  std::string backend() const { return advisor_->tag(); }
  const std::vector<Message>& transcript() const { return transcript_; }
  const History& history() const { return history_; }
  History& history() { return history_; }

  // Messages sent over the wire, honouring the context_turns knob.
  std::vector<Message> request_messages() const {
    if (opt_.context_turns <= 0 || transcript_.empty()) return transcript_;
    const std::size_t keep = static_cast<std::size_t>(opt_.context_turns) * 2 + 1;
    if (transcript_.size() <= keep + 1) return transcript_;
    std::vector<Message> out{transcript_.front()};
    out.insert(out.end(), transcript_.end() - static_cast<std::ptrdiff_t>(keep), transcript_.end());
    return out;
  }

  // Appends `prompt`, queries the backend and parses the reply. Invalid
  // replies get a corrective message and are retried up to the budget.
  ProposalResult propose(const std::string& prompt) {
    transcript_.push_back({"user", prompt});
    for (int attempt = 0;; ++attempt) {
      std::string raw = advisor_->respond(*this);
      transcript_.push_back({"assistant", raw});
      std::string reason;
      try {
        return {parse_proposal(space_, raw), raw, attempt};
      } catch (const ParseError& e) {
        reason = e.what();
      } catch (const InvalidArchitecture& e) {
        reason = e.what();
      }
      if (attempt >= opt_.parse_retry_budget) {
        throw AdvisorFailed("no valid proposal after " + std::to_string(attempt + 1) +
                            " replies; last error: " + reason);
      }
      transcript_.push_back({"user", corrective_prompt(reason)});
    }
  }

 private:
  SearchSpace space_;
  std::unique_ptr<Advisor> advisor_;
  SessionOptions opt_;
  std::vector<Message> transcript_;
  History history_;
};

// Uniform random proposals; ignores the transcript.
class RandomAdvisor final : public Advisor {
 public:
  explicit RandomAdvisor(std::uint64_t seed) : rng_(seed) {}
  std::string tag() const override { return "random"; }
  std::string respond(const AdvisorSession& s) override {
    return format_reply(random_arch(s.space(), rng_), "uniform random sample");
  }

 private:
  Rng rng_;
};

// One-step mutation of the best architecture so far (random when empty).
class HillClimbAdvisor final : public Advisor {
 public:
  explicit HillClimbAdvisor(std::uint64_t seed) : rng_(seed) {}
  std::string tag() const override { return "hillclimb"; }
  std::string respond(const AdvisorSession& s) override {
    const auto* best = s.history().best();
    if (!best) return format_reply(random_arch(s.space(), rng_), "random start");
    return format_reply(mutate(s.space(), best->arch, rng_),
                        "mutation of iteration " + std::to_string(best->iteration));
  }

 private:
  Rng rng_;
};

// Emits a fixed sequence of architectures, then declares no improvement.
class ReplayAdvisor final : public Advisor {
 public:
  explicit ReplayAdvisor(std::vector<Architecture> fixture) : fixture_(std::move(fixture)) {}
  std::string tag() const override { return "replay"; }
  std::string respond(const AdvisorSession&) override {
    if (next_ >= fixture_.size()) return format_no_improvement("replay fixture exhausted");
    return format_reply(fixture_[next_++], "replayed");
  }

 private:
  std::vector<Architecture> fixture_;
  std::size_t next_ = 0;
};

// Canned raw replies in order; used to script protocol edge cases.
class ScriptedAdvisor final : public Advisor {
 public:
  explicit ScriptedAdvisor(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string tag() const override { return "scripted"; }
  std::string respond(const AdvisorSession&) override {
    if (next_ >= replies_.size()) throw TransportError("scripted advisor ran out of replies");
    return replies_[next_++];
  }
  std::size_t calls() const { return next_; }

 private:
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
};

// Replay fixture: JSONL of {"key": "..."} lines.
inline std::vector<Architecture> parse_replay_fixture(const SearchSpace& space, std::istream& in) {
  std::vector<Architecture> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("key") || !j["key"].is_string()) {
      throw FormatError(n, "expected {\"key\": string}");
    }
    try {
      out.push_back(parse_key(space, j["key"].get<std::string>()));
    } catch (const KeyParseError& e) {
      throw KeyParseError(e, n);
    }
  }
  return out;
}

}  // namespace genius
