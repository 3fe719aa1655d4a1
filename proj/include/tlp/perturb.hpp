#pragma once

// Task-level perturbations: object Addition, Removal and Displacement,
// scheduled at a random step and labelled task-related or distractor.

#include <algorithm>
#include <set>
#include <variant>
#include <vector>

#include "tlp/core.hpp"
#include "tlp/instr.hpp"
#include "tlp/tasks.hpp"
#include "tlp/world.hpp"

namespace tlp {

enum class PerturbKind { add, rmv, dis };

inline std::string_view perturb_kind_name(PerturbKind k) {
  switch (k) {
    case PerturbKind::add: return "ADD";
    case PerturbKind::rmv: return "RMV";
    case PerturbKind::dis: return "DIS";
  }
  return "?";
}

struct AddPayload {
  ObjectSpec spec;
  Placement placement;
  bool operator==(const AddPayload&) const = default;
};

struct RemovePayload {
  ObjectId target;
  bool operator==(const RemovePayload&) const = default;
};

struct Displacement {
  ObjectId target;
  Placement to;
  bool operator==(const Displacement&) const = default;
};

/// Moves sorted by object id.
struct DisplacePayload {
  std::vector<Displacement> moves;
  bool operator==(const DisplacePayload&) const = default;
};

using PerturbPayload = std::variant<AddPayload, RemovePayload, DisplacePayload>;

struct PerturbationEvent {
  PerturbKind kind = PerturbKind::add;
  int step = 1;
  PerturbPayload payload;
  bool task_related = false;
  /// Seeds deterministic re-sampling when a scheduled placement is taken at injection time.
  std::uint64_t resample_seed = 0;
  bool operator==(const PerturbationEvent&) const = default;
};

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

namespace detail {

/// Specs still needed by unsatisfied predicates (objects and their containers).
inline std::set<ObjectSpec> unconsumed_specs(const WorkspaceState& s, const GoalSpec& goal) {
  std::set<ObjectSpec> out;
  const auto mask = satisfied_mask(s, goal);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) continue;
    out.insert(predicate_object(goal.predicates[i]));
    if (const auto* g = std::get_if<InContainerGoal>(&goal.predicates[i])) out.insert(g->container);
  }
  return out;
}

}  // namespace detail

/// Whether an object of `spec` at `placement` blocks the destination of an
/// unsatisfied predicate (a goal bowl or goal stand slot).
inline bool occupies_pending_destination(const WorkspaceState& s, const GoalSpec& goal,
                                         const ObjectSpec& spec, const Placement& placement) {
  const auto mask = satisfied_mask(s, goal);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) continue;
    const auto& p = goal.predicates[i];
    if (const auto* g = std::get_if<InContainerGoal>(&p)) {
      const auto* in = std::get_if<InContainer>(&placement);
      if (!in || g->container.category != Category::bowl) continue;
      const auto* c = s.find(in->container);
      if (c && c->spec() == g->container && spec != g->object) return true;
    } else {
      const auto& st = std::get<OnStandGoal>(p);
      if (placement == Placement{OnStand{st.layer, st.slot}} && spec != st.object) return true;
    }
  }
  return false;
}

/// Ground-truth label of an event against the state it is injected into.
inline bool classify(const PerturbationEvent& e, const GoalSpec& goal, const WorkspaceState& s) {
  switch (e.kind) {
    case PerturbKind::add: {
      const auto& add = std::get<AddPayload>(e.payload);
      if (detail::unconsumed_specs(s, goal).count(add.spec)) return true;
      return occupies_pending_destination(s, goal, add.spec, add.placement);
    }
    case PerturbKind::rmv:
      return !goal_feasible(s, goal, {std::get<RemovePayload>(e.payload).target});
    case PerturbKind::dis:
      return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Scheduling
// ---------------------------------------------------------------------------

namespace detail {

inline WorkspaceState with_object(const WorkspaceState& s, const ObjectInstance& o) {
  StateEditor ed(s);
  ed.put(o);
  return std::move(ed).take();
}

/// Placements for a new object of `spec` that keep every object nameable.
inline std::vector<Placement> clean_table_slots(const WorkspaceState& s, const ObjectSpec& spec) {
  std::vector<Placement> out;
  for (const auto& p : free_table_slots(s)) {
    if (all_distinguishable(with_object(s, {s.next_id(), spec.category, spec.color, p}), spec)) {
      out.push_back(p);
    }
  }
  return out;
}

inline bool clean_placement(const WorkspaceState& s, const ObjectSpec& spec, const Placement& p) {
  ObjectInstance o{s.next_id(), spec.category, spec.color, p};
  try {
    auto next = add_object(s, o);
    return all_distinguishable(next, spec);
  } catch (const Error&) {
    return false;
  }
}

inline std::vector<Color> unused_block_colors(const GoalSpec& goal, Category category) {
  std::set<ObjectSpec> required;
  for (const auto& s : goal.required_specs()) required.insert(s);
  std::vector<Color> out;
  for (auto c : kBlockColors) {
    if (!required.count({category, c})) out.push_back(c);
  }
  return out;
}

/// State after the first `steps` nominal placements succeed.
inline WorkspaceState predicted_state(const EpisodeSpec& spec, const std::vector<PlannedSkill>& plan, int steps) {
  WorkspaceState s = spec.initial;
  for (int i = 0; i < steps && i < static_cast<int>(plan.size()); ++i) {
    const auto& st = plan[static_cast<std::size_t>(i)];
    s = place_object(s, st.object, resolve_target(st.target, s, st.object));
  }
  return s;
}

[[noreturn]] inline void unsatisfiable(const std::string& msg) {
  throw Error(Errc::unsatisfiable_scenario, msg);
}

inline AddPayload make_related_add(const EpisodeSpec& spec, const WorkspaceState& s, Rng& rng) {
  // Variant A: a lookalike of an object still waiting to be placed.
  const auto mask = satisfied_mask(s, spec.goal);
  std::set<ObjectSpec> pending_specs;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) pending_specs.insert(predicate_object(spec.goal.predicates[i]));
  }
  std::vector<ObjectSpec> pending(pending_specs.begin(), pending_specs.end());
  // Variant B: an unrelated block sitting in a pending goal bowl or stand slot.
  std::vector<Placement> blocked;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) continue;
    const auto& p = spec.goal.predicates[i];
    if (const auto* g = std::get_if<InContainerGoal>(&p); g && g->container.category == Category::bowl) {
      for (const auto& [id, o] : s.objects()) {
        if (o.spec() == g->container && contents(s, id).empty()) blocked.push_back(InContainer{id});
      }
    } else if (const auto* st = std::get_if<OnStandGoal>(&p)) {
      if (!stand_occupied(s, st->layer, st->slot) && stand_supported(s, st->layer, st->slot)) {
        blocked.push_back(OnStand{st->layer, st->slot});
      }
    }
  }
  std::sort(blocked.begin(), blocked.end());
  blocked.erase(std::unique(blocked.begin(), blocked.end()), blocked.end());
  const auto spare_colors = unused_block_colors(spec.goal, Category::block);

  const bool have_a = !pending.empty();
  const bool have_b = !blocked.empty() && !spare_colors.empty();
  if (!have_a && !have_b) unsatisfiable("no pending goal object to imitate or block");
  const bool use_a = have_a && (!have_b || rng.below(2) == 0);
  if (use_a) {
    const ObjectSpec look = rng.pick(pending);
    const auto slots = clean_table_slots(s, look);
    if (slots.empty()) unsatisfiable("no free table slot for a lookalike");
    return {look, rng.pick(slots)};
  }
  const Color c = rng.pick(spare_colors);
  return {{Category::block, c}, rng.pick(blocked)};
}

inline AddPayload make_distractor_add(const EpisodeSpec& spec, const WorkspaceState& s, Rng& rng) {
  std::vector<ObjectSpec> options;
  if (spec.task == TaskKind::pack_g) {
    std::set<ObjectSpec> required;
    for (const auto& r : spec.goal.required_specs()) required.insert(r);
    for (auto g : kGoodsCatalog) {
      if (!required.count({g, Color::none})) options.push_back({g, Color::none});
    }
  } else {
    for (auto c : unused_block_colors(spec.goal, Category::block)) options.push_back({Category::block, c});
    if (spec.task == TaskKind::matching) {
      for (auto c : unused_block_colors(spec.goal, Category::bowl)) options.push_back({Category::bowl, c});
    }
  }
  if (options.empty()) unsatisfiable("no distractor object kind left");
  const ObjectSpec pick = rng.pick(options);
  // Packing distractors may also land inside the box.
  if (is_item(pick.category) && (spec.task == TaskKind::pack_b || spec.task == TaskKind::pack_g) &&
      rng.below(2) == 0) {
    if (const auto* box = s.find_first(Category::box)) {
      Placement p = InContainer{box->id};
      if (clean_placement(s, pick, p)) return {pick, p};
    }
  }
  const auto slots = clean_table_slots(s, pick);
  if (slots.empty()) unsatisfiable("no free table slot for a distractor");
  return {pick, rng.pick(slots)};
}

inline std::vector<ObjectId> removable_items(const WorkspaceState& s) {
  std::vector<ObjectId> out;
  for (const auto& [id, o] : s.objects()) {
    if (is_item(o.category) && is_pickable(s, o)) out.push_back(id);
  }
  return out;
}

inline DisplacePayload make_displacement(const EpisodeSpec& spec, const WorkspaceState& s, int max_objects,
                                         const std::set<ObjectId>& skip, Rng& rng) {
  // Placed: objects serving satisfied predicates. Pending: objects the plan would move next.
  std::vector<ObjectId> placed;
  std::vector<ObjectId> pending;
  AssignmentOptions opts;
  opts.excluded = skip;
  const auto plan = assign_placements(s, spec.goal, opts);
  std::set<ObjectId> pending_set;
  for (const auto& st : plan) pending_set.insert(st.object);
  std::set<ObjectSpec> goal_specs;
  for (const auto& p : spec.goal.predicates) goal_specs.insert(predicate_object(p));
  for (const auto& [id, o] : s.objects()) {
    if (skip.count(id) || !is_item(o.category) || !is_pickable(s, o)) continue;
    if (pending_set.count(id)) pending.push_back(id);
    else if (goal_specs.count(o.spec()) && !std::holds_alternative<OnTable>(o.placement)) placed.push_back(id);
  }
  const int count = 1 + static_cast<int>(rng.below(static_cast<std::size_t>(max_objects)));
  DisplacePayload out;
  WorkspaceState cur = s;
  for (int i = 0; i < count; ++i) {
    std::vector<std::vector<ObjectId>*> pools;
    if (!placed.empty()) pools.push_back(&placed);
    if (!pending.empty()) pools.push_back(&pending);
    if (pools.empty()) break;
    auto& pool = *pools[rng.below(pools.size())];
    const std::size_t at = rng.below(pool.size());
    const ObjectId target = pool[at];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(at));
    // Destinations exclude the object's own region so the move is observable.
    const auto& obj = cur.at(target);
    StateEditor lift(cur);
    lift.erase(target);
    auto lifted = std::move(lift).take();
    std::vector<Placement> dests;
    const auto from_region = effective_region(cur, obj);
    for (const auto& p : clean_table_slots(lifted, obj.spec())) {
      if (std::get<OnTable>(p).region != from_region) dests.push_back(p);
    }
    if (dests.empty()) unsatisfiable("no free table slot for a displacement");
    const Placement to = rng.pick(dests);
    cur = place_object(cur, target, to);
    out.moves.push_back({target, to});
  }
  if (out.moves.empty()) unsatisfiable("nothing to displace");
  std::sort(out.moves.begin(), out.moves.end(), [](const auto& a, const auto& b) { return a.target < b.target; });
  return out;
}

}  // namespace detail

/// Perturbation events for one episode, all at the same step k. Payloads are
/// drawn against the state the nominal plan predicts after k steps; ADD events
/// that must be task-related need a step with work still pending, so they draw
/// k from [1, L-1].
inline std::vector<PerturbationEvent> schedule(const EpisodeSpec& spec, Rng& rng) {
  const Scenario sc = spec.perturb.scenario;
  if (sc == Scenario::none) return {};
  const auto plan = assign_placements(spec.initial, spec.goal);
  const int length = static_cast<int>(plan.size());
  if (length == 0) detail::unsatisfiable("nominal plan is empty");
  const bool needs_pending = sc == Scenario::add_related || sc == Scenario::mixed_add_dis;
  const int last = needs_pending ? length - 1 : length;
  if (last < 1) detail::unsatisfiable("plan too short for a task-related addition");
  const int k = 1 + static_cast<int>(rng.below(static_cast<std::size_t>(last)));
  const WorkspaceState at_k = detail::predicted_state(spec, plan, k);

  std::vector<PerturbationEvent> events;
  auto push = [&](PerturbKind kind, PerturbPayload payload, const WorkspaceState& against) {
    PerturbationEvent e{kind, k, std::move(payload), false, rng.next_u64()};
    e.task_related = classify(e, spec.goal, against);
    events.push_back(std::move(e));
  };

  switch (sc) {
    case Scenario::add_related:
      push(PerturbKind::add, detail::make_related_add(spec, at_k, rng), at_k);
      break;
    case Scenario::add_distractor:
      push(PerturbKind::add, detail::make_distractor_add(spec, at_k, rng), at_k);
      break;
    case Scenario::rmv_related:
    case Scenario::rmv_distractor: {
      const bool want_related = sc == Scenario::rmv_related;
      std::vector<ObjectId> options;
      for (auto id : detail::removable_items(at_k)) {
        if (!goal_feasible(at_k, spec.goal, {id}) == want_related) options.push_back(id);
      }
      if (options.empty()) {
        detail::unsatisfiable(want_related ? "no removable task-related object" : "no removable distractor");
      }
      push(PerturbKind::rmv, RemovePayload{rng.pick(options)}, at_k);
      break;
    }
    case Scenario::dis:
      push(PerturbKind::dis, detail::make_displacement(spec, at_k, spec.perturb.max_dis_objects, {}, rng), at_k);
      break;
    case Scenario::mixed_add_dis: {
      const auto add = detail::make_related_add(spec, at_k, rng);
      push(PerturbKind::add, add, at_k);
      const auto after_add = add_object(at_k, {at_k.next_id(), add.spec.category, add.spec.color, add.placement});
      push(PerturbKind::dis,
           detail::make_displacement(spec, after_add, spec.perturb.max_dis_objects, {at_k.next_id()}, rng),
           after_add);
      break;
    }
    case Scenario::none:
      break;
  }
  return events;
}

// ---------------------------------------------------------------------------
// Injection
// ---------------------------------------------------------------------------

struct InjectionResult {
  WorkspaceState state;
  StateDelta delta;
  /// The event as actually applied (placements re-sampled if needed).
  PerturbationEvent applied;
};

inline InjectionResult inject(const WorkspaceState& state, const PerturbationEvent& event) {
  Rng resample(event.resample_seed);
  InjectionResult out{state, {}, event};
  switch (event.kind) {
    case PerturbKind::add: {
      auto add = std::get<AddPayload>(event.payload);
      if (!detail::clean_placement(state, add.spec, add.placement)) {
        std::vector<Placement> options;
        if (std::holds_alternative<OnStand>(add.placement) && state.find_first(Category::stand)) {
          for (int layer = 1; layer <= kStandLayers; ++layer) {
            for (const auto& p : free_slots(state, StandLayer{layer})) options.push_back(p);
          }
        }
        if (options.empty()) options = detail::clean_table_slots(state, add.spec);
        if (options.empty()) throw Error(Errc::injection_conflict, "no free placement for the added object");
        add.placement = options[resample.below(options.size())];
        out.applied.payload = add;
      }
      ObjectInstance o{state.next_id(), add.spec.category, add.spec.color, add.placement};
      out.state = add_object(state, o);
      out.delta.added.push_back(o);
      break;
    }
    case PerturbKind::rmv: {
      const auto target = std::get<RemovePayload>(event.payload).target;
      const auto* o = state.find(target);
      if (!o || !is_pickable(state, *o)) {
        throw Error(Errc::injection_conflict, "removal target " + std::to_string(target.value) + " unavailable");
      }
      out.delta.removed.push_back(*o);
      out.state = remove_object(state, target);
      break;
    }
    case PerturbKind::dis: {
      auto payload = std::get<DisplacePayload>(event.payload);
      WorkspaceState cur = state;
      for (auto& mv : payload.moves) {
        const auto* o = cur.find(mv.target);
        if (!o || !is_pickable(cur, *o)) {
          throw Error(Errc::injection_conflict, "displacement target " + std::to_string(mv.target.value) + " unavailable");
        }
        const Placement from = o->placement;
        const auto from_region = effective_region(cur, *o);
        StateEditor lift(cur);
        lift.erase(mv.target);
        const auto lifted = std::move(lift).take();
        const auto clean = detail::clean_table_slots(lifted, o->spec());
        if (std::find(clean.begin(), clean.end(), mv.to) == clean.end()) {
          std::vector<Placement> options;
          for (const auto& p : clean) {
            if (std::get<OnTable>(p).region != from_region) options.push_back(p);
          }
          if (options.empty()) throw Error(Errc::injection_conflict, "no free table slot for the displaced object");
          mv.to = options[resample.below(options.size())];
        }
        cur = place_object(cur, mv.target, mv.to);
        out.delta.moved.push_back({mv.target, from, mv.to});
      }
      out.state = std::move(cur);
      out.applied.payload = payload;
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json event_to_json(const PerturbationEvent& e) {
  nlohmann::json j{{"kind", perturb_kind_name(e.kind)},
                   {"step", e.step},
                   {"task_related", e.task_related},
                   {"resample_seed", hex64(e.resample_seed)}};
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, AddPayload>) {
          j["spec"] = spec_to_json(p.spec);
          j["placement"] = placement_to_json(p.placement);
        } else if constexpr (std::is_same_v<P, RemovePayload>) {
          j["target"] = p.target.value;
        } else {
          auto moves = nlohmann::json::array();
          for (const auto& m : p.moves) moves.push_back({{"target", m.target.value}, {"to", placement_to_json(m.to)}});
          j["moves"] = std::move(moves);
        }
      },
      e.payload);
  return j;
}

}  // namespace tlp
