#pragma once

// Episode runner, campaigns, metrics and report emission.
//
// One episode owns three RNG streams derived from (master seed, episode index):
// "exec" for skill failures, "perturb" for the perturbation schedule and
// "monitor" for report noise. The episode spec itself comes from "episode".

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tlp/core.hpp"
#include "tlp/executor.hpp"
#include "tlp/monitor.hpp"
#include "tlp/perturb.hpp"
#include "tlp/planner.hpp"
#include "tlp/tasks.hpp"
#include "tlp/world.hpp"

namespace tlp {

enum class Terminal { done, alert, failed, budget_exceeded };

inline std::string_view terminal_name(Terminal t) {
  switch (t) {
    case Terminal::done: return "done";
    case Terminal::alert: return "alert";
    case Terminal::failed: return "failed";
    case Terminal::budget_exceeded: return "budget_exceeded";
  }
  return "?";
}

struct StepRecord {
  int step = 0;
  std::string instruction;
  bool succeeded = true;
  std::string report;
  std::string monologue;
  std::optional<nlohmann::json> verdict;
  std::uint64_t state_hash = 0;
};

struct EpisodeRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::uint64_t spec_hash = 0;
  int nominal_length = 0;
  std::vector<PerturbationEvent> events;
  std::vector<StepRecord> steps;
  /// Reasoning behind the terminal decision, if any.
  std::string final_monologue;
  Terminal terminal = Terminal::failed;
  std::string failure_reason;
  int steps_taken = 0;
  int successful_skills = 0;
  bool goal_satisfied = false;
  /// Ground truth for removal scenarios: was the removed object task-related?
  std::optional<bool> rmv_label;
  /// With an oracle monitor, steps where the planner's belief diverged from the world.
  int belief_mismatches = 0;
  std::vector<std::string> trace;
  std::uint64_t trace_hash = 0;

  bool success() const { return terminal == Terminal::done && goal_satisfied; }
  bool alerted() const { return terminal == Terminal::alert; }
};

inline int step_budget(int nominal_length) { return 4 * nominal_length + 20; }

inline nlohmann::json verdict_to_json(const HCoTVerdict& v) {
  auto impacts = nlohmann::json::array();
  for (const auto& fi : v.impacts) {
    impacts.push_back({{"object", fi.object_phrase},
                       {"affects", fi.affected_instruction},
                       {"action", fi.action == ImpactAction::discard ? "discard" : "reground"}});
  }
  return {{"feasible", v.feasible},
          {"feasibility", v.feasibility_explanation},
          {"progress_intact", v.progress_intact},
          {"violated", v.violated},
          {"progress", v.progress_explanation},
          {"impacts", std::move(impacts)},
          {"operations", v.operations_explanation}};
}

inline nlohmann::json noise_to_json(const NoiseModel& n) {
  return {{"eps1", n.flip_exec}, {"eps2", n.miss_perturb}, {"eps3", n.hallucinate}};
}

inline NoiseModel noise_from_json(const nlohmann::json& j) {
  return {j.at("eps1").get<double>(), j.at("eps2").get<double>(), j.at("eps3").get<double>()};
}

inline std::string monitor_label(const NoiseModel& n) { return n.is_oracle() ? "oracle" : "noisy"; }

/// Runs one episode to a terminal state. Never throws for planner, grounding or
/// injection problems; those become terminal states.
inline EpisodeRecord run_episode(const EpisodeSpec& spec, Planner& planner, const NoiseModel& noise,
                                 std::uint64_t master, std::size_t index) {
  EpisodeRecord rec;
  rec.index = index;
  rec.seed = spec.seed;
  rec.spec_hash = episode_hash(spec);
  rec.nominal_length = static_cast<int>(assign_placements(spec.initial, spec.goal).size());

  Rng exec_rng(stream_seed(master, index, "exec"));
  Rng perturb_rng(stream_seed(master, index, "perturb"));
  Rng monitor_rng(stream_seed(master, index, "monitor"));
  const ExecutorConfig exec_cfg{spec.failure_prob};

  const auto scheduled = schedule(spec, perturb_rng);
  auto events_json = nlohmann::json::array();
  for (const auto& e : scheduled) events_json.push_back(event_to_json(e));
  rec.trace.push_back(nlohmann::json{{"type", "episode"},
                                     {"index", index},
                                     {"seed", hex64(spec.seed)},
                                     {"spec_hash", hex64(rec.spec_hash)},
                                     {"task", task_name(spec.task)},
                                     {"scenario", scenario_name(spec.perturb.scenario)},
                                     {"planner", planner_name(planner.kind())},
                                     {"failure_prob", spec.failure_prob},
                                     {"noise", noise_to_json(noise)},
                                     {"nominal_length", rec.nominal_length},
                                     {"events", std::move(events_json)}}
                          .dump());

  WorkspaceState state = spec.initial;
  const int budget = step_budget(rec.nominal_length);
  std::optional<MonitorReport> report;
  bool finished = false;

  auto finish = [&](Terminal t, std::string reason = {}) {
    rec.terminal = t;
    rec.failure_reason = std::move(reason);
    finished = true;
  };

  while (!finished) {
    if (rec.steps_taken >= budget) {
      finish(Terminal::budget_exceeded, "step budget of " + std::to_string(budget) + " exhausted");
      break;
    }
    Decision decision;
    try {
      decision = planner.next_decision(report ? &*report : nullptr);
    } catch (const Error& e) {
      finish(Terminal::failed, std::string(errc_name(e.code())) + ": " + e.what());
      break;
    }
    if (noise.is_oracle() && planner.belief() &&
        observable_hash(planner.belief()->believed) != observable_hash(state)) {
      ++rec.belief_mismatches;
    }
    if (std::holds_alternative<DoneDecision>(decision)) {
      rec.final_monologue = planner.monologue();
      finish(Terminal::done);
      break;
    }
    if (std::holds_alternative<AlertDecision>(decision)) {
      rec.final_monologue = planner.monologue();
      finish(Terminal::alert);
      break;
    }
    const auto& instr = std::get<SkillDecision>(decision).instruction;
    StepRecord step;
    step.instruction = render_instruction(instr);
    step.monologue = planner.monologue();
    if (const auto* v = planner.last_verdict()) step.verdict = verdict_to_json(*v);

    ExecResult exec;
    try {
      exec = execute(state, instr, exec_cfg, exec_rng);
    } catch (const Error& e) {
      finish(Terminal::failed, std::string(errc_name(e.code())) + ": " + e.what());
      break;
    }
    ++rec.steps_taken;
    step.step = rec.steps_taken;
    step.succeeded = exec.outcome.status == ExecStatus::succeeded;
    if (step.succeeded) ++rec.successful_skills;
    const WorkspaceState after_exec = exec.state;
    const ObjectSpec acted = after_exec.at(exec.outcome.object).spec();

    std::vector<StateDelta> deltas;
    WorkspaceState cur = after_exec;
    for (const auto& ev : scheduled) {
      if (ev.step != rec.steps_taken) continue;
      PerturbationEvent applied = ev;
      try {
        auto inj = inject(cur, ev);
        applied = inj.applied;
        applied.task_related = classify(ev, spec.goal, cur);
        cur = std::move(inj.state);
        deltas.push_back(std::move(inj.delta));
      } catch (const Error& e) {
        if (e.code() != Errc::injection_conflict) throw;
        continue;
      }
      if (applied.kind == PerturbKind::rmv) rec.rmv_label = applied.task_related;
      rec.events.push_back(applied);
    }
    state = std::move(cur);

    const auto truth = observe(rec.steps_taken, exec.outcome, after_exec, deltas);
    report = apply_noise(truth, noise, monitor_rng, acted);
    step.report = render_report(*report);
    step.state_hash = state_hash(state);

    nlohmann::json line{{"type", "step"},
                        {"step", step.step},
                        {"instruction", step.instruction},
                        {"outcome", step.succeeded ? "succeeded" : "dropped"},
                        {"report", step.report},
                        {"state_hash", hex64(step.state_hash)}};
    if (!step.monologue.empty()) line["monologue"] = step.monologue;
    if (step.verdict) line["verdict"] = *step.verdict;
    rec.trace.push_back(line.dump());
    rec.steps.push_back(std::move(step));
  }

  // Removal scheduled but never reached: the label is the scheduled one.
  if (!rec.rmv_label && is_rmv(spec.perturb.scenario)) {
    for (const auto& e : scheduled) {
      if (e.kind == PerturbKind::rmv) rec.rmv_label = e.task_related;
    }
  }
  rec.goal_satisfied = goal_satisfied(state, spec.goal);
  nlohmann::json term{{"type", "terminal"},
                      {"terminal", terminal_name(rec.terminal)},
                      {"steps_taken", rec.steps_taken},
                      {"goal_satisfied", rec.goal_satisfied},
                      {"final_state_hash", hex64(state_hash(state))}};
  if (!rec.failure_reason.empty()) term["reason"] = rec.failure_reason;
  if (!rec.final_monologue.empty()) term["monologue"] = rec.final_monologue;
  if (rec.rmv_label) term["rmv_task_related"] = *rec.rmv_label;
  if (noise.is_oracle() && planner.belief()) term["belief_mismatches"] = rec.belief_mismatches;
  rec.trace.push_back(term.dump());

  std::string joined;
  for (const auto& l : rec.trace) joined += l + "\n";
  rec.trace_hash = fnv1a64(joined);
  return rec;
}

inline EpisodeRecord run_episode(const EpisodeSpec& spec, PlannerKind kind, const NoiseModel& noise,
                                 std::uint64_t master, std::size_t index) {
  auto planner = make_planner(kind, spec);
  return run_episode(spec, *planner, noise, master, index);
}

// ---------------------------------------------------------------------------
// Campaigns
// ---------------------------------------------------------------------------

struct CampaignConfig {
  TaskKind task = TaskKind::matching;
  Scenario scenario = Scenario::none;
  PlannerKind planner = PlannerKind::hcot;
  NoiseModel noise;
  double failure_prob = 0.0;
  int episodes = 100;
  std::uint64_t seed = 0;
  TaskSizes sizes;
  int max_dis_objects = 2;
  /// 0 = one per hardware thread, 1 = serial.
  unsigned threads = 1;
  bool operator==(const CampaignConfig&) const = default;
};

inline void validate(const CampaignConfig& c) {
  auto bad = [](const std::string& path, const std::string& msg) {
    throw Error(Errc::config_error, path + ": " + msg);
  };
  if (c.episodes < 1) bad("episodes", "must be at least 1");
  if (!(c.failure_prob >= 0.0 && c.failure_prob <= 1.0)) bad("failure_prob", "must be in [0, 1]");
  if (!(c.noise.flip_exec >= 0.0 && c.noise.flip_exec <= 1.0)) bad("noise.eps1", "must be in [0, 1]");
  if (!(c.noise.miss_perturb >= 0.0 && c.noise.miss_perturb <= 1.0)) bad("noise.eps2", "must be in [0, 1]");
  if (!(c.noise.hallucinate >= 0.0 && c.noise.hallucinate <= 1.0)) bad("noise.eps3", "must be in [0, 1]");
  if (c.max_dis_objects < 1) bad("max_dis_objects", "must be at least 1");
  if (c.sizes.slot_capacity < 1) bad("sizes.slot_capacity", "must be at least 1");
}

inline nlohmann::json config_to_json(const CampaignConfig& c) {
  return {{"task", task_name(c.task)},
          {"scenario", scenario_name(c.scenario)},
          {"planner", planner_name(c.planner)},
          {"noise", noise_to_json(c.noise)},
          {"failure_prob", c.failure_prob},
          {"episodes", c.episodes},
          {"seed", c.seed},
          {"goal_objects", c.sizes.goal_objects},
          {"distractors", c.sizes.distractors},
          {"slot_capacity", c.sizes.slot_capacity},
          {"max_dis_objects", c.max_dis_objects}};
}

inline CampaignConfig config_from_json(const nlohmann::json& j) {
  CampaignConfig c;
  auto field = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw Error(Errc::config_error, std::string(key) + ": missing");
    return j.at(key);
  };
  try {
    auto task = task_from_name(field("task").get<std::string>());
    if (!task) throw Error(Errc::config_error, "task: unknown value");
    auto sc = scenario_from_name(field("scenario").get<std::string>());
    if (!sc) throw Error(Errc::config_error, "scenario: unknown value");
    auto pl = planner_from_name(field("planner").get<std::string>());
    if (!pl) throw Error(Errc::config_error, "planner: unknown value");
    c.task = *task;
    c.scenario = *sc;
    c.planner = *pl;
    c.noise = noise_from_json(field("noise"));
    c.failure_prob = field("failure_prob").get<double>();
    c.episodes = field("episodes").get<int>();
    c.seed = field("seed").get<std::uint64_t>();
    c.sizes.goal_objects = j.value("goal_objects", -1);
    c.sizes.distractors = j.value("distractors", -1);
    c.sizes.slot_capacity = j.value("slot_capacity", 4);
    c.max_dis_objects = j.value("max_dis_objects", 2);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config_error, std::string("campaign config: ") + e.what());
  }
  return c;
}

inline EpisodeSpec campaign_episode(const CampaignConfig& c, std::size_t index) {
  return generate_episode(c.task, stream_seed(c.seed, index, "episode"), c.sizes,
                          PerturbConfig{c.scenario, c.max_dis_objects}, c.failure_prob);
}

struct Confusion {
  int tp = 0;
  int fn = 0;
  int fp = 0;
  int tn = 0;
  int total() const { return tp + fn + fp + tn; }
  double recall() const { return tp + fn == 0 ? 1.0 : static_cast<double>(tp) / (tp + fn); }
  double precision() const { return tp + fp == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp); }
  bool operator==(const Confusion&) const = default;
};

struct MetricsSummary {
  TaskKind task = TaskKind::matching;
  Scenario scenario = Scenario::none;
  std::string planner;
  std::string monitor;
  int episodes = 0;
  std::uint64_t seed = 0;
  double failure_prob = 0.0;
  /// Episodes scored for SR (removal scenarios are not).
  int scored = 0;
  int successes = 0;
  /// Mean executed attempts over episodes ending in done; distractor additions only.
  std::optional<double> asc;
  std::optional<Confusion> confusion;
  long long attempts = 0;
  long long successful_skills = 0;
  int invariant_violations = 0;
  std::uint64_t trace_hash = 0;

  double sr() const { return scored == 0 ? 0.0 : static_cast<double>(successes) / scored; }
  bool operator==(const MetricsSummary&) const = default;
};

/// Ordered reduction over records sorted by episode index.
inline MetricsSummary summarize(const CampaignConfig& c, const std::vector<EpisodeRecord>& records) {
  MetricsSummary m;
  m.task = c.task;
  m.scenario = c.scenario;
  m.planner = std::string(planner_name(c.planner));
  m.monitor = monitor_label(c.noise);
  m.episodes = static_cast<int>(records.size());
  m.seed = c.seed;
  m.failure_prob = c.failure_prob;
  const bool rmv = is_rmv(c.scenario);
  if (rmv) m.confusion = Confusion{};
  double asc_sum = 0.0;
  int asc_n = 0;
  std::string hashes;
  for (const auto& r : records) {
    hashes += hex64(r.trace_hash);
    m.attempts += r.steps_taken;
    m.successful_skills += r.successful_skills;
    m.invariant_violations += r.belief_mismatches;
    if (rmv) {
      const bool positive = r.rmv_label.value_or(false);
      auto& cm = *m.confusion;
      if (positive) {
        (r.alerted() ? cm.tp : cm.fn)++;
      } else {
        (r.alerted() ? cm.fp : cm.tn)++;
      }
    } else {
      ++m.scored;
      if (r.success()) ++m.successes;
    }
    if (c.scenario == Scenario::add_distractor && r.terminal == Terminal::done) {
      asc_sum += r.steps_taken;
      ++asc_n;
    }
  }
  if (c.scenario == Scenario::add_distractor && asc_n > 0) m.asc = asc_sum / asc_n;
  m.trace_hash = fnv1a64(hashes);
  return m;
}

struct CampaignResult {
  MetricsSummary summary;
  std::vector<EpisodeRecord> records;
};

/// Builds the planner for one episode.
using PlannerFactory = std::function<std::unique_ptr<Planner>(const EpisodeSpec&, std::size_t index)>;

inline CampaignResult run_campaign(const CampaignConfig& c, const PlannerFactory& factory) {
  validate(c);
  std::vector<EpisodeRecord> records(static_cast<std::size_t>(c.episodes));
  std::vector<std::exception_ptr> errors(records.size());
  auto run_one = [&](std::size_t i) {
    try {
      const auto spec = campaign_episode(c, i);
      auto planner = factory(spec, i);
      records[i] = run_episode(spec, *planner, c.noise, c.seed, i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  unsigned threads = c.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : c.threads;
  threads = std::min<unsigned>(threads, static_cast<unsigned>(records.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < records.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < records.size(); i = next++) run_one(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  auto summary = summarize(c, records);
  return {std::move(summary), std::move(records)};
}

inline CampaignResult run_campaign(const CampaignConfig& c) {
  return run_campaign(c, [&](const EpisodeSpec& spec, std::size_t) { return make_planner(c.planner, spec); });
}

/// Whole campaign as JSON Lines: a campaign header, then every episode's lines.
inline std::string campaign_trace(const CampaignConfig& c, const CampaignResult& r) {
  std::string out = nlohmann::json{{"type", "campaign"}, {"config", config_to_json(c)}}.dump() + "\n";
  for (const auto& rec : r.records) {
    for (const auto& l : rec.trace) out += l + "\n";
  }
  return out;
}

struct ReplayResult {
  bool ok = true;
  std::size_t lines_checked = 0;
  std::string mismatch;
};

/// Re-runs the campaign named in a trace's header and compares every line.
inline ReplayResult replay_trace(std::string_view trace_text, unsigned threads = 1) {
  std::istringstream in{std::string(trace_text)};
  std::string header;
  if (!std::getline(in, header)) throw Error(Errc::serialization_error, "empty trace");
  nlohmann::json hj;
  try {
    hj = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::serialization_error, std::string("trace header: ") + e.what());
  }
  if (hj.value("type", "") != "campaign") throw Error(Errc::serialization_error, "trace does not start with a campaign header");
  auto cfg = config_from_json(hj.at("config"));
  cfg.threads = threads;
  const auto expected = campaign_trace(cfg, run_campaign(cfg));
  std::istringstream exp(expected);
  std::istringstream got{std::string(trace_text)};
  std::string a;
  std::string b;
  ReplayResult res;
  std::size_t line = 0;
  while (true) {
    const bool ha = static_cast<bool>(std::getline(exp, a));
    const bool hb = static_cast<bool>(std::getline(got, b));
    if (!ha && !hb) break;
    ++line;
    if (ha != hb || a != b) {
      res.ok = false;
      res.mismatch = "line " + std::to_string(line) + (hb ? ": " + b.substr(0, 120) : ": missing");
      break;
    }
    ++res.lines_checked;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

enum class ReportFormat { table, csv };

inline nlohmann::json summary_to_json(const MetricsSummary& m) {
  nlohmann::json j{{"task", task_name(m.task)},
                   {"scenario", scenario_name(m.scenario)},
                   {"planner", m.planner},
                   {"monitor", m.monitor},
                   {"episodes", m.episodes},
                   {"seed", m.seed},
                   {"failure_prob", m.failure_prob},
                   {"scored", m.scored},
                   {"successes", m.successes},
                   {"sr", m.sr()},
                   {"attempts", m.attempts},
                   {"successful_skills", m.successful_skills},
                   {"invariant_violations", m.invariant_violations},
                   {"trace_hash", hex64(m.trace_hash)}};
  if (m.asc) j["asc"] = *m.asc;
  if (m.confusion) {
    j["confusion"] = {{"tp", m.confusion->tp}, {"fn", m.confusion->fn}, {"fp", m.confusion->fp}, {"tn", m.confusion->tn}};
  }
  return j;
}

inline std::uint64_t parse_hex64(const std::string& s) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used, 16);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::serialization_error, "bad hex value '" + s + "'");
  }
}

inline MetricsSummary summary_from_json(const nlohmann::json& j) {
  try {
    MetricsSummary m;
    auto task = task_from_name(j.at("task").get<std::string>());
    auto sc = scenario_from_name(j.at("scenario").get<std::string>());
    if (!task || !sc) throw Error(Errc::serialization_error, "unknown task or scenario in summary");
    m.task = *task;
    m.scenario = *sc;
    m.planner = j.at("planner").get<std::string>();
    m.monitor = j.at("monitor").get<std::string>();
    m.episodes = j.at("episodes").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.failure_prob = j.at("failure_prob").get<double>();
    m.scored = j.at("scored").get<int>();
    m.successes = j.at("successes").get<int>();
    m.attempts = j.at("attempts").get<long long>();
    m.successful_skills = j.at("successful_skills").get<long long>();
    m.invariant_violations = j.at("invariant_violations").get<int>();
    m.trace_hash = parse_hex64(j.at("trace_hash").get<std::string>());
    if (j.contains("asc")) m.asc = j.at("asc").get<double>();
    if (j.contains("confusion")) {
      const auto& c = j.at("confusion");
      m.confusion = Confusion{c.at("tp").get<int>(), c.at("fn").get<int>(), c.at("fp").get<int>(), c.at("tn").get<int>()};
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::serialization_error, std::string("summary: ") + e.what());
  }
}

namespace detail {

inline std::string fmt_double(double v, const char* f = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline constexpr std::string_view kCsvHeader =
    "task,scenario,planner,monitor,episodes,seed,failure_prob,scored,successes,sr,asc,tp,fn,fp,tn,attempts,"
    "successful_skills,invariant_violations,trace_hash";

/// `table` pivots rows (task x scenario) against columns (planner/monitor);
/// cells are SR% (with ASC for distractor additions) or TP/FN/FP/TN for
/// removals. `csv` is one row per summary and parses back losslessly.
inline std::string emit_report(std::vector<MetricsSummary> summaries, ReportFormat format) {
  auto row_key = [](const MetricsSummary& m) { return std::pair{static_cast<int>(m.task), static_cast<int>(m.scenario)}; };
  std::stable_sort(summaries.begin(), summaries.end(), [&](const auto& a, const auto& b) {
    return std::tuple{row_key(a), a.planner, a.monitor, a.failure_prob} <
           std::tuple{row_key(b), b.planner, b.monitor, b.failure_prob};
  });
  std::string out;
  if (format == ReportFormat::csv) {
    out = std::string(kCsvHeader) + "\n";
    for (const auto& m : summaries) {
      const auto c = m.confusion;
      auto opt = [&](bool present, int v) { return present ? std::to_string(v) : std::string(); };
      out += std::string(task_name(m.task)) + "," + std::string(scenario_name(m.scenario)) + "," + m.planner + "," +
             m.monitor + "," + std::to_string(m.episodes) + "," + std::to_string(m.seed) + "," +
             detail::fmt_double(m.failure_prob) + "," + std::to_string(m.scored) + "," + std::to_string(m.successes) +
             "," + (m.scored ? detail::fmt_double(m.sr()) : std::string()) + "," +
             (m.asc ? detail::fmt_double(*m.asc) : std::string()) + "," + opt(c.has_value(), c ? c->tp : 0) + "," +
             opt(c.has_value(), c ? c->fn : 0) + "," + opt(c.has_value(), c ? c->fp : 0) + "," +
             opt(c.has_value(), c ? c->tn : 0) + "," + std::to_string(m.attempts) + "," +
             std::to_string(m.successful_skills) + "," + std::to_string(m.invariant_violations) + "," +
             hex64(m.trace_hash) + "\n";
    }
    return out;
  }

  auto column_of = [](const MetricsSummary& m) {
    std::string col = m.planner + "/" + m.monitor;
    if (m.failure_prob > 0.0) col += " p=" + detail::fmt_double(m.failure_prob, "%g");
    return col;
  };
  std::vector<std::string> columns;
  std::vector<std::pair<int, int>> rows;
  for (const auto& m : summaries) {
    const auto col = column_of(m);
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
    if (std::find(rows.begin(), rows.end(), row_key(m)) == rows.end()) rows.push_back(row_key(m));
  }
  auto cell = [&](const MetricsSummary& m) {
    if (m.confusion) {
      const auto& c = *m.confusion;
      return std::to_string(c.tp) + "/" + std::to_string(c.fn) + "/" + std::to_string(c.fp) + "/" + std::to_string(c.tn);
    }
    std::string s = detail::fmt_double(100.0 * m.sr(), "%.1f");
    if (m.asc) s += " (" + detail::fmt_double(*m.asc, "%.2f") + ")";
    return s;
  };
  std::vector<std::vector<std::string>> grid;
  grid.push_back({"task", "scenario"});
  for (const auto& c : columns) grid[0].push_back(c);
  for (const auto& rk : rows) {
    std::vector<std::string> line{std::string(task_name(static_cast<TaskKind>(rk.first))),
                                  std::string(scenario_name(static_cast<Scenario>(rk.second)))};
    for (const auto& c : columns) {
      std::string v = "-";
      for (const auto& m : summaries) {
        if (row_key(m) == rk && column_of(m) == c) v = cell(m);
      }
      line.push_back(v);
    }
    grid.push_back(std::move(line));
  }
  std::vector<std::size_t> width(grid[0].size(), 0);
  for (const auto& line : grid) {
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  }
  for (std::size_t r = 0; r < grid.size(); ++r) {
    std::string line;
    for (std::size_t i = 0; i < grid[r].size(); ++i) {
      line += (i ? "  " : "") + detail::pad(grid[r][i], width[i]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
    if (r == 0) {
      std::string rule;
      for (std::size_t i = 0; i < width.size(); ++i) rule += (i ? "  " : "") + std::string(width[i], '-');
      out += rule + "\n";
    }
  }
  out += "SR% (ASC) per cell; removal rows show TP/FN/FP/TN and are not scored for SR.\n";
  return out;
}

inline std::vector<MetricsSummary> parse_csv_report(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw Error(Errc::serialization_error, "csv header mismatch");
  std::vector<MetricsSummary> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 19) throw Error(Errc::serialization_error, "csv line " + std::to_string(lineno) + ": expected 19 fields");
    try {
      MetricsSummary m;
      auto task = task_from_name(f[0]);
      auto sc = scenario_from_name(f[1]);
      if (!task || !sc) throw Error(Errc::serialization_error, "unknown task or scenario");
      m.task = *task;
      m.scenario = *sc;
      m.planner = f[2];
      m.monitor = f[3];
      m.episodes = std::stoi(f[4]);
      m.seed = std::stoull(f[5]);
      m.failure_prob = std::stod(f[6]);
      m.scored = std::stoi(f[7]);
      m.successes = std::stoi(f[8]);
      if (!f[10].empty()) m.asc = std::stod(f[10]);
      if (!f[11].empty()) m.confusion = Confusion{std::stoi(f[11]), std::stoi(f[12]), std::stoi(f[13]), std::stoi(f[14])};
      m.attempts = std::stoll(f[15]);
      m.successful_skills = std::stoll(f[16]);
      m.invariant_violations = std::stoi(f[17]);
      m.trace_hash = parse_hex64(f[18]);
      out.push_back(std::move(m));
    } catch (const std::logic_error&) {
      throw Error(Errc::serialization_error, "csv line " + std::to_string(lineno) + ": bad number");
    }
  }
  return out;
}

}  // namespace tlp
