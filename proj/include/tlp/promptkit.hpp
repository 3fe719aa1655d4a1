#pragma once

// Prompt transcripts for a text-completion planner, reply parsing, and the
// backend seam. Replies are untrusted: they are parsed, never executed.

#include <cctype>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "tlp/core.hpp"
#include "tlp/harness.hpp"
#include "tlp/instr.hpp"
#include "tlp/monitor.hpp"
#include "tlp/planner.hpp"
#include "tlp/tasks.hpp"

namespace tlp {

enum class Speaker { user, robot, vlm };

inline std::string_view speaker_tag(Speaker s) {
  switch (s) {
    case Speaker::user: return "User";
    case Speaker::robot: return "Robot";
    case Speaker::vlm: return "VLM";
  }
  return "?";
}

struct Turn {
  Speaker speaker = Speaker::user;
  std::string text;
  bool operator==(const Turn&) const = default;
};

class Transcript {
 public:
  /// Throws invariant_violation if the first turn is not the user's or two
  /// VLM turns would be adjacent.
  void add(Speaker s, std::string text) {
    if (turns_.empty() && s != Speaker::user) {
      throw Error(Errc::invariant_violation, "a transcript starts with the user turn");
    }
    if (s == Speaker::vlm && !turns_.empty() && turns_.back().speaker == Speaker::vlm) {
      throw Error(Errc::invariant_violation, "two consecutive VLM turns");
    }
    turns_.push_back({s, std::move(text)});
  }

  const std::vector<Turn>& turns() const { return turns_; }
  bool empty() const { return turns_.empty(); }

  std::string render() const {
    std::string out;
    for (const auto& t : turns_) out += std::string(speaker_tag(t.speaker)) + ": " + t.text + "\n";
    return out;
  }

 private:
  std::vector<Turn> turns_;
};

/// Objects with their locations, then the goal.
inline std::string scene_description(const EpisodeSpec& spec) {
  const auto& s = spec.initial;
  std::string out = "The workspace contains";
  bool first = true;
  for (const auto& [id, o] : s.objects()) {
    out += first ? " " : ", ";
    first = false;
    const auto phrase = spec_phrase(o.spec());
    const char* article = is_fixture(o.category) ? "the " : std::string_view("aeiou").find(phrase[0]) != std::string_view::npos ? "an " : "a ";
    out += article + phrase + " " + location_phrase(location_of(s, o));
  }
  out += ". The goal is:";
  first = true;
  for (const auto& p : spec.goal.predicates) {
    out += first ? " " : "; ";
    first = false;
    out += describe_predicate(p);
  }
  return out + ".";
}

inline constexpr std::string_view kLayerQuestions =
    "Q1 (feasibility): Can the task still be completed with the objects now in the workspace?\n"
    "Q2 (progress): Are all the steps completed so far still in place?\n"
    "Q3 (operations): Does the change affect any of the remaining instructions?\n";

inline constexpr std::string_view kQuery = "What is your next plan?";

inline constexpr std::string_view kPreamble =
    "You control a robot arm that rearranges objects on a table. Reply with one instruction of the form "
    "\"put the <object> <destination>\", or \"done\" when the goal is reached, or \"alert\" when it can no "
    "longer be reached. After a perturbation, answer Q1 to Q3 with explanations before the instruction.\n";

/// A finished episode as a transcript: the scene, each step's reasoning,
/// instruction and report, then the terminal decision.
inline Transcript transcript_from_record(const EpisodeSpec& spec, const EpisodeRecord& rec) {
  Transcript t;
  t.add(Speaker::user, scene_description(spec));
  for (const auto& st : rec.steps) {
    if (!st.monologue.empty()) t.add(Speaker::robot, st.monologue);
    t.add(Speaker::robot, st.instruction);
    t.add(Speaker::vlm, st.report);
  }
  if (!rec.final_monologue.empty()) t.add(Speaker::robot, rec.final_monologue);
  if (rec.terminal == Terminal::done || rec.terminal == Terminal::alert) {
    t.add(Speaker::robot, std::string(terminal_name(rec.terminal)));
  }
  return t;
}

inline constexpr std::array<Scenario, 6> kExampleScenarios = {
    Scenario::add_related, Scenario::add_distractor, Scenario::rmv_related,
    Scenario::rmv_distractor, Scenario::dis, Scenario::mixed_add_dis};

/// One worked episode per perturbation scenario, produced by the rule-based
/// planner on fixed seeds. Computed once.
inline const std::string& example_episodes() {
  static const std::string text = [] {
    std::string out;
    int n = 0;
    for (auto sc : kExampleScenarios) {
      const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(n);
      const auto spec = generate_episode(TaskKind::matching, seed, {}, PerturbConfig{sc, 2}, 0.0);
      const auto rec = run_episode(spec, PlannerKind::hcot, NoiseModel{}, seed, 0);
      out += "Example " + std::to_string(++n) + " (" + std::string(scenario_name(sc)) + "):\n";
      out += transcript_from_record(spec, rec).render();
      out += "\n";
    }
    return out;
  }();
  return text;
}

/// Deterministic prompt: preamble, worked examples, the current transcript,
/// the new report (with the layer questions if it shows a perturbation), and
/// the query. An empty transcript starts with the scene description.
inline std::string render_prompt(const EpisodeSpec& spec, const Transcript& transcript, const MonitorReport* report) {
  std::string out(kPreamble);
  out += "\n";
  out += example_episodes();
  out += "Current episode:\n";
  out += transcript.empty() ? "User: " + scene_description(spec) + "\n" : transcript.render();
  if (report) {
    out += "VLM: " + render_report(*report) + "\n";
    if (!report->perturbations().empty()) out += kLayerQuestions;
  }
  out += std::string(kQuery) + "\n";
  return out;
}

/// The earliest of: a well-formed "put the ..." sentence, the word "done",
/// the word "alert". Throws unparseable_reply when there is none.
inline Decision parse_completion(std::string_view text) {
  std::string lower(text);
  for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  auto is_word_char = [&](std::size_t i) { return i < lower.size() && std::isalpha(static_cast<unsigned char>(lower[i])); };
  auto word_at = [&](std::size_t i, std::string_view w) {
    return lower.compare(i, w.size(), w) == 0 && (i == 0 || !is_word_char(i - 1)) && !is_word_char(i + w.size());
  };
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (word_at(i, "done")) return DoneDecision{};
    if (word_at(i, "alert")) return AlertDecision{};
    if (word_at(i, "put")) {
      std::size_t end = lower.find_first_of(".,!?;:\n\"", i);
      if (end == std::string::npos) end = lower.size();
      try {
        return SkillDecision{parse_instruction(std::string_view(text).substr(i, end - i))};
      } catch (const Error&) {
        // Not a well-formed instruction; keep scanning.
      }
    }
  }
  throw Error(Errc::unparseable_reply, "no instruction, done or alert in reply");
}

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  /// Throws Error(backend_error) on transport failure or timeout.
  virtual std::string complete(const std::string& prompt) = 0;
};

/// Canned replies in order; running out is a backend error.
class ScriptedBackend final : public CompletionBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies) : replies_(replies.begin(), replies.end()) {}

  std::string complete(const std::string& prompt) override {
    prompts_.push_back(prompt);
    if (replies_.empty()) throw Error(Errc::backend_error, "scripted backend has no replies left");
    auto r = std::move(replies_.front());
    replies_.pop_front();
    return r;
  }

  const std::vector<std::string>& prompts() const { return prompts_; }

 private:
  std::deque<std::string> replies_;
  std::vector<std::string> prompts_;
};

/// Decisions come from a completion backend; the monologue is the raw reply.
class LanguagePlanner final : public Planner {
 public:
  LanguagePlanner(EpisodeSpec spec, std::unique_ptr<CompletionBackend> backend)
      : spec_(std::move(spec)), backend_(std::move(backend)) {
    transcript_.add(Speaker::user, scene_description(spec_));
  }

  PlannerKind kind() const override { return PlannerKind::language; }
  std::string monologue() const override { return reply_; }

  Decision next_decision(const MonitorReport* report) override {
    const auto prompt = render_prompt(spec_, transcript_, report);
    reply_ = backend_->complete(prompt);
    const auto decision = parse_completion(reply_);
    if (report) transcript_.add(Speaker::vlm, render_report(*report));
    transcript_.add(Speaker::robot, render_decision(decision));
    return decision;
  }

  const Transcript& transcript() const { return transcript_; }

 private:
  EpisodeSpec spec_;
  std::unique_ptr<CompletionBackend> backend_;
  Transcript transcript_;
  std::string reply_;
};

/// The decision texts a finished episode produced, in order, ending with
/// "done" or "alert" when it terminated that way.
inline std::vector<std::string> decision_texts(const EpisodeRecord& rec) {
  std::vector<std::string> out;
  for (const auto& st : rec.steps) out.push_back(st.instruction);
  if (rec.terminal == Terminal::done || rec.terminal == Terminal::alert) {
    out.emplace_back(terminal_name(rec.terminal));
  }
  return out;
}

}  // namespace tlp
