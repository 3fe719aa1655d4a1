#pragma once

// Task planners. Each consumes monitor reports and emits the next decision:
//   OpenLoop    - emits the precomputed nominal plan, never looks at feedback.
//   FlatReplan  - reacts to feedback with one-shot corrections: retry on
//                 failure, discard every added object, alert on every removal,
//                 move displaced objects back, and only the first perturbation
//                 of a report is handled.
//   HCoT        - layered analysis of each perturbation (feasibility, then
//                 progress, then impact on future operations) driving an
//                 ordered corrective plan.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "tlp/core.hpp"
#include "tlp/instr.hpp"
#include "tlp/monitor.hpp"
#include "tlp/perturb.hpp"
#include "tlp/tasks.hpp"
#include "tlp/world.hpp"

namespace tlp {

enum class PlannerKind { open_loop, flat_replan, hcot, language };

inline constexpr std::array<PlannerKind, 3> kAllPlanners = {PlannerKind::open_loop, PlannerKind::flat_replan,
                                                            PlannerKind::hcot};

inline std::string_view planner_name(PlannerKind k) {
  switch (k) {
    case PlannerKind::open_loop: return "open_loop";
    case PlannerKind::flat_replan: return "flat_replan";
    case PlannerKind::hcot: return "hcot";
    case PlannerKind::language: return "language";
  }
  return "?";
}

inline std::optional<PlannerKind> planner_from_name(std::string_view n) {
  for (auto k : kAllPlanners) {
    if (planner_name(k) == n) return k;
  }
  if (n == planner_name(PlannerKind::language)) return PlannerKind::language;
  return std::nullopt;
}

struct SkillDecision {
  SkillInstruction instruction;
  bool operator==(const SkillDecision&) const = default;
};
struct DoneDecision {
  bool operator==(const DoneDecision&) const = default;
};
struct AlertDecision {
  bool operator==(const AlertDecision&) const = default;
};

using Decision = std::variant<SkillDecision, DoneDecision, AlertDecision>;

/// "done", "alert", or the instruction sentence.
inline std::string render_decision(const Decision& d) {
  if (const auto* s = std::get_if<SkillDecision>(&d)) return render_instruction(s->instruction);
  return std::holds_alternative<DoneDecision>(d) ? "done" : "alert";
}

// ---------------------------------------------------------------------------
// Belief
// ---------------------------------------------------------------------------

struct Belief {
  WorkspaceState believed;
  /// Queued placements, phrased when emitted.
  std::vector<PlannedSkill> pending;
  std::vector<bool> satisfied;
};

/// What a single r2 entry did to the believed state.
struct EntryEffect {
  enum class Kind { added, removed, moved } kind = Kind::added;
  ObjectId object;
  ObjectSpec spec;
  std::optional<Placement> from;
};

struct BeliefUpdate {
  Belief belief;
  /// Satisfaction after r1 was applied, before any perturbation entry.
  std::vector<bool> satisfied_before_perturbation;
  std::vector<EntryEffect> effects;
};

namespace detail {

[[noreturn]] inline void belief_failure(const std::string& msg) {
  throw Error(Errc::belief_grounding_failure, msg);
}

inline std::optional<ObjectId> find_at(const WorkspaceState& s, const ObjectSpec& spec, const Location& loc) {
  std::optional<ObjectId> hit;
  for (const auto& [id, o] : s.objects()) {
    if (o.spec() != spec || in_trash(o)) continue;
    if (location_of(s, o) == loc) {
      if (hit) belief_failure("two " + spec_phrase(spec) + "s at " + location_noun(loc));
      hit = id;
    }
  }
  return hit;
}

inline Placement placement_for(const WorkspaceState& s, const Location& loc, std::optional<ObjectId> moving) {
  return std::visit(
      [&](const auto& v) -> Placement {
        using L = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<L, TableLocation>) {
          return ground_destination(TableDest{v.region}, s, moving);
        } else if constexpr (std::is_same_v<L, ContainerLocation>) {
          return InContainer{ground(v.container, s)};
        } else if constexpr (std::is_same_v<L, StandLocation>) {
          return OnStand{v.layer, v.slot};
        } else {
          return InTrash{};
        }
      },
      loc);
}

}  // namespace detail

/// Applies r1 (intended effect of `last`, or its drop) and then each r2
/// entry, re-grounding report descriptions against the believed state.
inline BeliefUpdate update_belief(const Belief& belief, const GoalSpec& goal,
                                  const std::optional<SkillInstruction>& last, const MonitorReport& report) {
  BeliefUpdate out{belief, {}, {}};
  WorkspaceState& s = out.belief.believed;
  try {
    if (last) {
      const ObjectId id = ground(last->pick, s);
      if (report.r1.succeeded) {
        s = place_object(s, id, ground_destination(last->dest, s, id));
      } else if (report.r1.drop) {
        s = place_object(s, id, ground_destination(TableDest{report.r1.drop->region}, s, id));
      }
    }
    out.satisfied_before_perturbation = satisfied_mask(s, goal);
    for (const auto& entry : report.r2) {
      if (const auto* a = std::get_if<AddedEntry>(&entry)) {
        ObjectInstance o{s.next_id(), a->object.category, a->object.color,
                         detail::placement_for(s, a->at, std::nullopt)};
        s = add_object(s, o);
        out.effects.push_back({EntryEffect::Kind::added, o.id, a->object, std::nullopt});
      } else if (const auto* r = std::get_if<RemovedEntry>(&entry)) {
        auto id = detail::find_at(s, r->object, r->from);
        if (!id) detail::belief_failure("no " + spec_phrase(r->object) + " at " + location_noun(r->from));
        const Placement from = s.at(*id).placement;
        s = remove_object(s, *id);
        out.effects.push_back({EntryEffect::Kind::removed, *id, r->object, from});
      } else if (const auto* m = std::get_if<MovedEntry>(&entry)) {
        auto id = detail::find_at(s, m->object, m->from);
        if (!id) detail::belief_failure("no " + spec_phrase(m->object) + " at " + location_noun(m->from));
        const Placement from = s.at(*id).placement;
        s = place_object(s, *id, detail::placement_for(s, m->to, *id));
        out.effects.push_back({EntryEffect::Kind::moved, *id, m->object, from});
      }
    }
  } catch (const Error& e) {
    if (e.code() == Errc::belief_grounding_failure) throw;
    detail::belief_failure(e.what());
  }
  out.belief.satisfied = satisfied_mask(s, goal);
  return out;
}

// ---------------------------------------------------------------------------
// Layered analysis
// ---------------------------------------------------------------------------

enum class ImpactAction { discard, reground };

struct FutureImpact {
  ObjectId object;
  std::string object_phrase;
  /// The pending step the perturbation interferes with (may be empty).
  std::string affected_instruction;
  ImpactAction action = ImpactAction::discard;
  bool operator==(const FutureImpact&) const = default;
};

struct HCoTVerdict {
  bool feasible = true;
  std::string feasibility_explanation;
  bool progress_intact = true;
  std::vector<std::size_t> violated;
  std::string progress_explanation;
  std::vector<FutureImpact> impacts;
  std::string operations_explanation;
};

inline HCoTVerdict hcot_evaluate(const Belief& belief, const GoalSpec& goal, const BeliefUpdate& update) {
  const WorkspaceState& s = belief.believed;
  HCoTVerdict v;

  // Layer 1: can every predicate still be met with the objects that remain?
  v.feasible = goal_feasible(s, goal);
  if (v.feasible) {
    v.feasibility_explanation = "Every object the goal needs is still in the workspace, so the task remains achievable.";
  } else {
    std::map<ObjectSpec, int> have;
    for (const auto& [id, o] : s.objects()) {
      if (!in_trash(o)) ++have[o.spec()];
    }
    std::string missing;
    for (const auto& spec : goal.required_specs()) {
      if (have[spec]-- <= 0) {
        missing = spec_phrase(spec);
        break;
      }
    }
    if (missing.empty() && !s.find_first(Category::stand)) missing = "stand";
    v.feasibility_explanation = "No " + (missing.empty() ? std::string("required object") : missing) +
                                " is left in the workspace, so the task can no longer be completed.";
  }

  // Layer 2: which predicates satisfied before the perturbation no longer hold?
  const auto now = satisfied_mask(s, goal);
  for (std::size_t i = 0; i < now.size(); ++i) {
    if (i < update.satisfied_before_perturbation.size() && update.satisfied_before_perturbation[i] && !now[i]) {
      v.violated.push_back(i);
    }
  }
  v.progress_intact = v.violated.empty();
  if (v.progress_intact) {
    v.progress_explanation = "All completed steps are still in place, so task progress is preserved.";
  } else {
    v.progress_explanation = "Progress was undone:";
    for (auto i : v.violated) v.progress_explanation += " " + describe_predicate(goal.predicates[i]) + " no longer holds;";
    v.progress_explanation.back() = '.';
  }

  // Layer 3: does anything interfere with the steps still to come?
  const auto unconsumed = detail::unconsumed_specs(s, goal);
  std::set<ObjectId> pending_objects;
  for (const auto& p : belief.pending) pending_objects.insert(p.object);
  auto pending_phrase = [&](const ObjectSpec& spec) -> std::string {
    for (std::size_t i = 0; i < goal.predicates.size(); ++i) {
      if (!now[i] && predicate_object(goal.predicates[i]) == spec) return describe_predicate(goal.predicates[i]);
    }
    for (const auto& p : goal.predicates) {
      if (const auto* g = std::get_if<InContainerGoal>(&p); g && g->container == spec) return describe_predicate(p);
    }
    return {};
  };
  for (const auto& eff : update.effects) {
    const auto* o = s.find(eff.object);
    if (eff.kind == EntryEffect::Kind::added && o) {
      const bool lookalike = unconsumed.count(o->spec()) > 0;
      const bool blocking = occupies_pending_destination(s, goal, o->spec(), o->placement);
      if (lookalike || blocking) {
        FutureImpact fi{eff.object, spec_phrase(o->spec()), {}, ImpactAction::discard};
        if (lookalike) {
          fi.affected_instruction = pending_phrase(o->spec());
        } else {
          for (std::size_t i = 0; i < goal.predicates.size(); ++i) {
            if (!now[i] && occupies_pending_destination(s, GoalSpec{{goal.predicates[i]}}, o->spec(), o->placement)) {
              fi.affected_instruction = describe_predicate(goal.predicates[i]);
              break;
            }
          }
        }
        v.impacts.push_back(std::move(fi));
      }
    } else if (eff.kind == EntryEffect::Kind::moved && o) {
      if (occupies_pending_destination(s, goal, o->spec(), o->placement)) {
        v.impacts.push_back({eff.object, spec_phrase(o->spec()), pending_phrase(o->spec()), ImpactAction::discard});
      } else if (pending_objects.count(eff.object)) {
        v.impacts.push_back({eff.object, spec_phrase(o->spec()), pending_phrase(o->spec()), ImpactAction::reground});
      }
    } else if (eff.kind == EntryEffect::Kind::removed && pending_objects.count(eff.object)) {
      v.impacts.push_back({eff.object, spec_phrase(eff.spec), pending_phrase(eff.spec), ImpactAction::reground});
    }
  }
  if (v.impacts.empty()) {
    v.operations_explanation = "The change does not affect any remaining instruction, so it can be ignored.";
  } else {
    for (const auto& fi : v.impacts) {
      if (!v.operations_explanation.empty()) v.operations_explanation += " ";
      if (fi.action == ImpactAction::discard) {
        v.operations_explanation += "The " + fi.object_phrase + " would interfere with the step where " +
                                    (fi.affected_instruction.empty() ? std::string("the goal is pursued") : fi.affected_instruction) +
                                    ", so it must be discarded into the trash can first.";
      } else {
        v.operations_explanation += "The " + fi.object_phrase + " changed place, so the step where " +
                                    (fi.affected_instruction.empty() ? std::string("it is used") : fi.affected_instruction) +
                                    " must refer to its new location.";
      }
    }
  }
  return v;
}

struct CorrectivePlan {
  /// Discards, then the retried step, then restores (stand steps kept in support order).
  std::vector<PlannedSkill> correctives;
  /// Remaining nominal work, re-planned against the believed state.
  std::vector<PlannedSkill> resumed;
  std::vector<SkillInstruction> instructions;
};

/// Ordered recovery after a perturbation and/or a failed step. Requires a
/// feasible verdict.
inline CorrectivePlan corrective_plan(const HCoTVerdict& verdict, const Belief& belief, const GoalSpec& goal,
                                      const std::optional<PlannedSkill>& failed) {
  const WorkspaceState& s = belief.believed;
  CorrectivePlan out;
  AssignmentOptions opts;
  for (const auto& fi : verdict.impacts) {
    if (fi.action != ImpactAction::discard || opts.excluded.count(fi.object)) continue;
    const auto* o = s.find(fi.object);
    if (!o || in_trash(*o)) continue;
    opts.excluded.insert(fi.object);
    out.correctives.push_back({fi.object, TrashTarget{}, PlannedSkill::npos});
  }
  std::optional<PlannedSkill> retry;
  if (failed) {
    if (failed->predicate != PlannedSkill::npos) {
      opts.preferred[failed->predicate] = failed->object;
    } else if (const auto* o = s.find(failed->object);
               o && !in_trash(*o) && !opts.excluded.count(o->id) && is_pickable(s, *o)) {
      retry = *failed;
    }
  }
  std::vector<PlannedSkill> full;
  try {
    full = assign_placements(s, goal, opts);
  } catch (const Error& e) {
    throw Error(Errc::ungroundable_plan, e.what());
  }
  std::vector<PlannedSkill> ordered;
  if (retry) ordered.push_back(*retry);
  std::set<std::size_t> violated(verdict.violated.begin(), verdict.violated.end());
  std::vector<PlannedSkill> restores;
  std::vector<PlannedSkill> rest;
  for (const auto& p : full) {
    if (failed && failed->predicate != PlannedSkill::npos && p.predicate == failed->predicate) {
      ordered.insert(ordered.begin(), p);
    } else if (violated.count(p.predicate)) {
      restores.push_back(p);
    } else {
      rest.push_back(p);
    }
  }
  ordered.insert(ordered.end(), restores.begin(), restores.end());
  const std::size_t corrective_count = ordered.size();
  ordered.insert(ordered.end(), rest.begin(), rest.end());
  // Stand placements must respect support order whatever their origin.
  auto layer_of = [](const PlannedSkill& p) {
    const auto* st = std::get_if<StandTarget>(&p.target);
    return st ? st->layer : 0;
  };
  std::vector<std::size_t> idx(ordered.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return layer_of(ordered[a]) < layer_of(ordered[b]); });
  for (auto i : idx) {
    (i < corrective_count ? out.correctives : out.resumed).push_back(ordered[i]);
  }
  // Phrase in execution order so each descriptor is valid when it is used.
  std::vector<PlannedSkill> all = out.correctives;
  all.insert(all.end(), out.resumed.begin(), out.resumed.end());
  try {
    out.instructions = phrase_plan(s, all);
  } catch (const Error& e) {
    throw Error(Errc::ungroundable_plan, e.what());
  }
  out.instructions.resize(out.correctives.size());
  return out;
}

// ---------------------------------------------------------------------------
// Planners
// ---------------------------------------------------------------------------

class Planner {
 public:
  virtual ~Planner() = default;
  virtual PlannerKind kind() const = 0;
  /// `report` is null before the first step.
  virtual Decision next_decision(const MonitorReport* report) = 0;
  /// Reasoning text behind the last decision (empty when none was needed).
  virtual std::string monologue() const { return {}; }
  virtual const HCoTVerdict* last_verdict() const { return nullptr; }
  virtual const Belief* belief() const { return nullptr; }
};

class OpenLoopPlanner final : public Planner {
 public:
  explicit OpenLoopPlanner(const EpisodeSpec& spec) : plan_(nominal_plan(spec.initial, spec.goal)) {}

  PlannerKind kind() const override { return PlannerKind::open_loop; }

  Decision next_decision(const MonitorReport*) override {
    if (next_ >= plan_.size()) return DoneDecision{};
    return SkillDecision{plan_[next_++]};
  }

 private:
  std::vector<SkillInstruction> plan_;
  std::size_t next_ = 0;
};

namespace detail {

/// Shared belief bookkeeping for the closed-loop planners.
class BeliefTracker {
 public:
  explicit BeliefTracker(const EpisodeSpec& spec) : goal_(spec.goal) {
    belief_.believed = spec.initial;
    belief_.pending = assign_placements(spec.initial, spec.goal);
    belief_.satisfied = satisfied_mask(spec.initial, spec.goal);
  }

  const GoalSpec& goal() const { return goal_; }
  Belief& belief() { return belief_; }
  const Belief& belief() const { return belief_; }

  BeliefUpdate observe(const MonitorReport& report) {
    std::optional<SkillInstruction> last;
    if (in_flight_) last = in_flight_instruction_;
    auto upd = update_belief(belief_, goal_, last, report);
    belief_ = upd.belief;
    return upd;
  }

  Decision emit_next() {
    auto next = belief_.pending.front();
    belief_.pending.erase(belief_.pending.begin());
    SkillInstruction instr;
    try {
      instr = phrase_instruction(next.object, next.target, belief_.believed);
    } catch (const Error& e) {
      throw Error(Errc::ungroundable_plan, e.what());
    }
    in_flight_ = next;
    in_flight_instruction_ = instr;
    return SkillDecision{instr};
  }

  const std::optional<PlannedSkill>& in_flight() const { return in_flight_; }

 private:
  GoalSpec goal_;
  Belief belief_;
  std::optional<PlannedSkill> in_flight_;
  SkillInstruction in_flight_instruction_;
};

}  // namespace detail

class FlatReplanPlanner final : public Planner {
 public:
  explicit FlatReplanPlanner(const EpisodeSpec& spec) : tracker_(spec) {}

  PlannerKind kind() const override { return PlannerKind::flat_replan; }
  const Belief* belief() const override { return &tracker_.belief(); }
  std::string monologue() const override { return monologue_; }

  Decision next_decision(const MonitorReport* report) override {
    monologue_.clear();
    if (report) {
      auto upd = tracker_.observe(*report);
      auto& b = tracker_.belief();
      std::vector<PlannedSkill> front;
      if (!upd.effects.empty()) {
        // Only the first perturbation of the report gets a response.
        const auto& eff = upd.effects.front();
        switch (eff.kind) {
          case EntryEffect::Kind::removed:
            monologue_ = "The " + spec_phrase(eff.spec) + " was removed; raising an alert.";
            return AlertDecision{};
          case EntryEffect::Kind::added:
            monologue_ = "A new " + spec_phrase(eff.spec) + " appeared; discarding it.";
            front.push_back({eff.object, TrashTarget{}, PlannedSkill::npos});
            break;
          case EntryEffect::Kind::moved:
            monologue_ = "The " + spec_phrase(eff.spec) + " was moved; putting it back.";
            front.push_back({eff.object, target_for(*eff.from, b.believed), PlannedSkill::npos});
            break;
        }
      }
      if (!report->r1.succeeded && tracker_.in_flight()) {
        if (!monologue_.empty()) monologue_ += " ";
        monologue_ += "The action failed; trying again.";
        front.push_back(*tracker_.in_flight());
      }
      b.pending.insert(b.pending.begin(), front.begin(), front.end());
    }
    if (tracker_.belief().pending.empty()) return DoneDecision{};
    return tracker_.emit_next();
  }

 private:
  static Target target_for(const Placement& p, const WorkspaceState&) {
    return std::visit(
        [](const auto& v) -> Target {
          using P = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<P, OnTable>) return TableTarget{v.region};
          else if constexpr (std::is_same_v<P, InContainer>) return ContainerTarget{v.container};
          else if constexpr (std::is_same_v<P, OnStand>) return StandTarget{v.layer, v.slot};
          else return TrashTarget{};
        },
        p);
  }

  detail::BeliefTracker tracker_;
  std::string monologue_;
};

class HCoTPlanner final : public Planner {
 public:
  explicit HCoTPlanner(const EpisodeSpec& spec) : tracker_(spec) {}

  PlannerKind kind() const override { return PlannerKind::hcot; }
  const Belief* belief() const override { return &tracker_.belief(); }
  const HCoTVerdict* last_verdict() const override { return verdict_ ? &*verdict_ : nullptr; }
  std::string monologue() const override { return monologue_; }

  Decision next_decision(const MonitorReport* report) override {
    verdict_.reset();
    monologue_.clear();
    const GoalSpec& goal = tracker_.goal();
    if (report) {
      auto upd = tracker_.observe(*report);
      const bool failed = !report->r1.succeeded;
      const auto failed_step = failed ? tracker_.in_flight() : std::nullopt;
      if (!upd.effects.empty()) {
        verdict_ = hcot_evaluate(tracker_.belief(), goal, upd);
        monologue_ = "Feasibility: " + verdict_->feasibility_explanation +
                     " Progress: " + verdict_->progress_explanation +
                     " Operations: " + verdict_->operations_explanation;
        if (!verdict_->feasible) return AlertDecision{};
        replan(*verdict_, failed_step);
      } else if (failed) {
        monologue_ = "The action failed; retrying it.";
        replan(HCoTVerdict{}, failed_step);
      }
    }
    auto& b = tracker_.belief();
    if (goal_satisfied(b.believed, goal)) return DoneDecision{};
    if (b.pending.empty()) replan(HCoTVerdict{}, std::nullopt);
    if (b.pending.empty()) return DoneDecision{};
    return tracker_.emit_next();
  }

 private:
  void replan(const HCoTVerdict& v, const std::optional<PlannedSkill>& failed) {
    auto plan = corrective_plan(v, tracker_.belief(), tracker_.goal(), failed);
    auto& pending = tracker_.belief().pending;
    pending = plan.correctives;
    pending.insert(pending.end(), plan.resumed.begin(), plan.resumed.end());
  }

  detail::BeliefTracker tracker_;
  std::optional<HCoTVerdict> verdict_;
  std::string monologue_;
};

inline std::unique_ptr<Planner> make_planner(PlannerKind kind, const EpisodeSpec& spec) {
  switch (kind) {
    case PlannerKind::open_loop: return std::make_unique<OpenLoopPlanner>(spec);
    case PlannerKind::flat_replan: return std::make_unique<FlatReplanPlanner>(spec);
    case PlannerKind::hcot: return std::make_unique<HCoTPlanner>(spec);
    case PlannerKind::language: break;
  }
  throw Error(Errc::config_error, "the language planner needs a completion backend");
}

}  // namespace tlp
