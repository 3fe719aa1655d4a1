#pragma once

// Task catalog (Matching, Pack-B, Pack-G, Stacking): goal predicates,
// seed-deterministic episode generation and straight-line nominal plans.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tlp/core.hpp"
#include "tlp/instr.hpp"
#include "tlp/world.hpp"

namespace tlp {

enum class TaskKind { matching, pack_b, pack_g, stacking };

inline constexpr std::array<TaskKind, 4> kAllTasks = {TaskKind::matching, TaskKind::pack_b,
                                                      TaskKind::pack_g, TaskKind::stacking};

inline std::string_view task_name(TaskKind t) {
  switch (t) {
    case TaskKind::matching: return "matching";
    case TaskKind::pack_b: return "pack_b";
    case TaskKind::pack_g: return "pack_g";
    case TaskKind::stacking: return "stacking";
  }
  return "?";
}

inline std::optional<TaskKind> task_from_name(std::string_view n) {
  for (auto t : kAllTasks) {
    if (task_name(t) == n) return t;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Perturbation configuration (carried by every episode)
// ---------------------------------------------------------------------------

enum class Scenario {
  none,
  add_related,
  add_distractor,
  rmv_related,
  rmv_distractor,
  dis,
  mixed_add_dis,
};

inline constexpr std::array<Scenario, 7> kAllScenarios = {
    Scenario::none,           Scenario::add_related, Scenario::add_distractor, Scenario::rmv_related,
    Scenario::rmv_distractor, Scenario::dis,         Scenario::mixed_add_dis};

inline std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::none: return "none";
    case Scenario::add_related: return "add_related";
    case Scenario::add_distractor: return "add_distractor";
    case Scenario::rmv_related: return "rmv_related";
    case Scenario::rmv_distractor: return "rmv_distractor";
    case Scenario::dis: return "dis";
    case Scenario::mixed_add_dis: return "mixed_add_dis";
  }
  return "?";
}

inline std::optional<Scenario> scenario_from_name(std::string_view n) {
  for (auto s : kAllScenarios) {
    if (scenario_name(s) == n) return s;
  }
  return std::nullopt;
}

inline bool is_rmv(Scenario s) { return s == Scenario::rmv_related || s == Scenario::rmv_distractor; }

struct PerturbConfig {
  Scenario scenario = Scenario::none;
  int max_dis_objects = 2;

  int events_per_episode() const {
    if (scenario == Scenario::none) return 0;
    return scenario == Scenario::mixed_add_dis ? 2 : 1;
  }
  bool operator==(const PerturbConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Goals
// ---------------------------------------------------------------------------

struct InContainerGoal {
  ObjectSpec object;
  ObjectSpec container;
  bool operator==(const InContainerGoal&) const = default;
};

struct OnStandGoal {
  ObjectSpec object;
  int layer = 1;
  int slot = 0;
  bool operator==(const OnStandGoal&) const = default;
};

using GoalPredicate = std::variant<InContainerGoal, OnStandGoal>;

inline ObjectSpec predicate_object(const GoalPredicate& p) {
  return std::visit([](const auto& g) { return g.object; }, p);
}

inline std::string describe_predicate(const GoalPredicate& p) {
  if (const auto* g = std::get_if<InContainerGoal>(&p)) {
    return "the " + spec_phrase(g->object) + " is in the " + spec_phrase(g->container);
  }
  const auto& g = std::get<OnStandGoal>(p);
  return "the " + spec_phrase(g.object) + " is on the stand at the " + stand_position_name(g.layer, g.slot);
}

struct GoalSpec {
  std::vector<GoalPredicate> predicates;

  /// Multiset of (category, color) the goal consumes: every predicate's
  /// object and, for containment, its container.
  std::vector<ObjectSpec> required_specs() const {
    std::vector<ObjectSpec> out;
    for (const auto& p : predicates) {
      out.push_back(predicate_object(p));
      if (const auto* g = std::get_if<InContainerGoal>(&p)) out.push_back(g->container);
    }
    return out;
  }
  bool operator==(const GoalSpec&) const = default;
};

/// Per-predicate satisfaction. Identical containment predicates are credited
/// in order, one per matching object.
inline std::vector<bool> satisfied_mask(const WorkspaceState& s, const GoalSpec& goal) {
  std::vector<bool> mask(goal.predicates.size(), false);
  std::map<std::pair<ObjectSpec, ObjectSpec>, int> available;
  for (const auto& [id, o] : s.objects()) {
    if (const auto* in = std::get_if<InContainer>(&o.placement)) {
      if (const auto* c = s.find(in->container)) ++available[{o.spec(), c->spec()}];
    }
  }
  for (std::size_t i = 0; i < goal.predicates.size(); ++i) {
    const auto& p = goal.predicates[i];
    if (const auto* g = std::get_if<InContainerGoal>(&p)) {
      auto& n = available[{g->object, g->container}];
      if (n > 0) {
        --n;
        mask[i] = true;
      }
    } else {
      const auto& st = std::get<OnStandGoal>(p);
      const auto* occ = occupant(s, OnStand{st.layer, st.slot});
      mask[i] = occ && occ->spec() == st.object;
    }
  }
  return mask;
}

inline std::vector<GoalPredicate> satisfied_predicates(const WorkspaceState& s, const GoalSpec& goal) {
  std::vector<GoalPredicate> out;
  const auto mask = satisfied_mask(s, goal);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.push_back(goal.predicates[i]);
  }
  return out;
}

inline bool goal_satisfied(const WorkspaceState& s, const GoalSpec& goal) {
  const auto mask = satisfied_mask(s, goal);
  return std::all_of(mask.begin(), mask.end(), [](bool b) { return b; });
}

/// Whether the remaining objects (minus `excluded`) can still satisfy every
/// predicate: enough items of each spec, enough bowls of each bowl spec, a box
/// for each boxed spec, a stand for stacking.
inline bool goal_feasible(const WorkspaceState& s, const GoalSpec& goal,
                          const std::set<ObjectId>& excluded = {}) {
  std::map<ObjectSpec, int> have;
  for (const auto& [id, o] : s.objects()) {
    if (in_trash(o) || excluded.count(id)) continue;
    ++have[o.spec()];
  }
  std::map<ObjectSpec, int> need_items;
  std::map<ObjectSpec, int> need_bowls;
  std::set<ObjectSpec> need_boxes;
  bool need_stand = false;
  for (const auto& p : goal.predicates) {
    ++need_items[predicate_object(p)];
    if (const auto* g = std::get_if<InContainerGoal>(&p)) {
      if (g->container.category == Category::bowl) ++need_bowls[g->container];
      else need_boxes.insert(g->container);
    } else {
      need_stand = true;
    }
  }
  for (const auto& [spec, n] : need_items) {
    if (have[spec] < n) return false;
  }
  for (const auto& [spec, n] : need_bowls) {
    if (have[spec] < n) return false;
  }
  for (const auto& spec : need_boxes) {
    if (have[spec] < 1) return false;
  }
  if (need_stand && have[{Category::stand, Color::none}] < 1) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Episodes
// ---------------------------------------------------------------------------

/// Object counts; -1 selects the task default.
struct TaskSizes {
  int goal_objects = -1;
  int distractors = -1;
  int slot_capacity = 4;
  bool operator==(const TaskSizes&) const = default;
};

inline TaskSizes resolve_sizes(TaskKind task, TaskSizes s) {
  if (s.goal_objects < 0) {
    s.goal_objects = task == TaskKind::matching ? 3 : task == TaskKind::stacking ? 6 : 4;
  }
  if (s.distractors < 0) s.distractors = 2;
  return s;
}

struct EpisodeSpec {
  TaskKind task = TaskKind::matching;
  TaskSizes sizes;
  WorkspaceState initial;
  GoalSpec goal;
  PerturbConfig perturb;
  double failure_prob = 0.0;
  std::uint64_t seed = 0;
  bool operator==(const EpisodeSpec&) const = default;
};

inline EpisodeSpec generate_episode(TaskKind task, std::uint64_t seed, TaskSizes sizes = {},
                                    PerturbConfig perturb = {}, double failure_prob = 0.0) {
  sizes = resolve_sizes(task, sizes);
  auto infeasible = [](const std::string& msg) { throw Error(Errc::infeasible_config, msg); };
  if (!(failure_prob >= 0.0 && failure_prob <= 1.0)) infeasible("failure probability outside [0, 1]");
  if (perturb.max_dis_objects < 1) infeasible("max_dis_objects must be >= 1");
  if (sizes.distractors < 0 || sizes.distractors > 4) infeasible("distractor count must be in [0, 4]");
  switch (task) {
    case TaskKind::matching:
      if (sizes.goal_objects < 2 || sizes.goal_objects > 6) infeasible("matching needs 2..6 pairs");
      break;
    case TaskKind::pack_b:
    case TaskKind::pack_g:
      if (sizes.goal_objects < 1 || sizes.goal_objects > 6) infeasible("packing needs 1..6 goal objects");
      break;
    case TaskKind::stacking:
      if (sizes.goal_objects != 6) infeasible("stacking uses exactly 6 blocks");
      break;
  }

  Rng rng(seed);
  const int n = sizes.goal_objects;
  std::vector<ObjectInstance> objs;
  GoalSpec goal;
  auto add = [&](Category c, Color col) {
    objs.push_back({ObjectId{static_cast<std::uint32_t>(objs.size())}, c, col, OnTable{}});
  };

  if (task == TaskKind::pack_g) {
    std::vector<Category> goods(kGoodsCatalog.begin(), kGoodsCatalog.end());
    rng.shuffle(goods);
    for (int i = 0; i < n; ++i) {
      add(goods[static_cast<std::size_t>(i)], Color::none);
      goal.predicates.push_back(InContainerGoal{{goods[static_cast<std::size_t>(i)], Color::none},
                                                {Category::box, Color::brown}});
    }
    for (int i = 0; i < sizes.distractors; ++i) add(goods[static_cast<std::size_t>(n + i)], Color::none);
    add(Category::box, Color::brown);
  } else {
    std::vector<Color> colors(kBlockColors.begin(), kBlockColors.end());
    if (n + sizes.distractors > static_cast<int>(colors.size())) infeasible("not enough distinct colors");
    rng.shuffle(colors);
    for (int i = 0; i < n; ++i) add(Category::block, colors[static_cast<std::size_t>(i)]);
    for (int i = 0; i < sizes.distractors; ++i) add(Category::block, colors[static_cast<std::size_t>(n + i)]);
    if (task == TaskKind::matching) {
      for (int i = 0; i < n; ++i) {
        const Color c = colors[static_cast<std::size_t>(i)];
        add(Category::bowl, c);
        goal.predicates.push_back(InContainerGoal{{Category::block, c}, {Category::bowl, c}});
      }
    } else if (task == TaskKind::pack_b) {
      for (int i = 0; i < n; ++i) {
        goal.predicates.push_back(InContainerGoal{{Category::block, colors[static_cast<std::size_t>(i)]},
                                                  {Category::box, Color::brown}});
      }
      add(Category::box, Color::brown);
    } else {
      // Each stand slot gets a required color; the goal colors were shuffled above.
      std::size_t next = 0;
      for (int layer = 1; layer <= kStandLayers; ++layer) {
        for (int slot = 0; slot < stand_slots(layer); ++slot) {
          goal.predicates.push_back(OnStandGoal{{Category::block, colors[next++]}, layer, slot});
        }
      }
      add(Category::stand, Color::none);
    }
  }
  add(Category::trash_can, Color::none);

  WorkspaceState state(sizes.slot_capacity);
  const auto table = free_table_slots(state);
  if (objs.size() > table.size()) infeasible("more objects than table slots");
  std::vector<Placement> slots = table;
  rng.shuffle(slots);
  for (std::size_t i = 0; i < objs.size(); ++i) {
    objs[i].placement = slots[i];
    state = add_object(state, objs[i]);
  }
  return {task, sizes, std::move(state), std::move(goal), perturb, failure_prob, seed};
}

// ---------------------------------------------------------------------------
// Planning
// ---------------------------------------------------------------------------

/// One placement the planner intends: move `object` to `target`, serving the
/// goal predicate at `predicate` (npos for discards and restores to the table).
struct PlannedSkill {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  ObjectId object;
  Target target;
  std::size_t predicate = npos;
  bool operator==(const PlannedSkill&) const = default;
};

/// Order in which unsatisfied predicates are served: goal order, with stand
/// predicates sorted by layer so supports come first.
inline std::vector<std::size_t> predicate_order(const GoalSpec& goal) {
  std::vector<std::size_t> idx(goal.predicates.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto layer_of = [&](std::size_t i) {
    const auto* st = std::get_if<OnStandGoal>(&goal.predicates[i]);
    return st ? st->layer : 0;
  };
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return layer_of(a) < layer_of(b); });
  return idx;
}

struct AssignmentOptions {
  /// Objects about to be discarded: never chosen, and bowls holding them count as free.
  std::set<ObjectId> excluded;
  /// Preferred object per predicate index (e.g. the object whose move just failed).
  std::map<std::size_t, ObjectId> preferred;
};

/// Chooses an object and destination for every unsatisfied predicate.
inline std::vector<PlannedSkill> assign_placements(const WorkspaceState& s, const GoalSpec& goal,
                                                   const AssignmentOptions& opts = {}) {
  const auto mask = satisfied_mask(s, goal);
  std::set<ObjectId> used = opts.excluded;
  // Objects already serving satisfied predicates stay where they are.
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const auto& p = goal.predicates[i];
    if (const auto* st = std::get_if<OnStandGoal>(&p)) {
      if (const auto* occ = occupant(s, OnStand{st->layer, st->slot})) used.insert(occ->id);
    } else {
      const auto& g = std::get<InContainerGoal>(p);
      for (const auto& [id, o] : s.objects()) {
        const auto* in = std::get_if<InContainer>(&o.placement);
        if (in && o.spec() == g.object && s.at(in->container).spec() == g.container) used.insert(id);
      }
    }
  }
  std::set<ObjectId> targeted_bowls;
  auto bowl_free = [&](const ObjectInstance& c) {
    for (auto held : contents(s, c.id)) {
      if (!opts.excluded.count(held)) return false;
    }
    return true;
  };

  std::vector<PlannedSkill> plan;
  for (std::size_t i : predicate_order(goal)) {
    if (mask[i]) continue;
    const auto& p = goal.predicates[i];
    const ObjectSpec want = predicate_object(p);
    std::optional<ObjectId> chosen;
    if (auto it = opts.preferred.find(i); it != opts.preferred.end()) {
      const auto* o = s.find(it->second);
      if (o && o->spec() == want && !in_trash(*o) && !used.count(o->id)) chosen = o->id;
    }
    if (!chosen) {
      for (const auto& [id, o] : s.objects()) {
        if (o.spec() == want && !in_trash(o) && !used.count(id)) {
          chosen = id;
          break;
        }
      }
    }
    if (!chosen) throw Error(Errc::no_plan, "no " + spec_phrase(want) + " available");
    used.insert(*chosen);

    Target target = TrashTarget{};
    if (const auto* g = std::get_if<InContainerGoal>(&p)) {
      std::optional<ObjectId> cont;
      for (const auto& [id, o] : s.objects()) {
        if (o.spec() != g->container || opts.excluded.count(id) || !is_container(o.category)) continue;
        if (o.category == Category::bowl && (targeted_bowls.count(id) || !bowl_free(o))) continue;
        cont = id;
        break;
      }
      if (!cont) throw Error(Errc::no_plan, "no free " + spec_phrase(g->container));
      if (s.at(*cont).category == Category::bowl) targeted_bowls.insert(*cont);
      target = ContainerTarget{*cont};
    } else {
      const auto& st = std::get<OnStandGoal>(p);
      if (!s.find_first(Category::stand)) throw Error(Errc::no_plan, "no stand");
      target = StandTarget{st.layer, st.slot};
    }
    plan.push_back({*chosen, target, i});
  }
  return plan;
}

/// Placement a target denotes in `s` for the moving object.
inline Placement resolve_target(const Target& t, const WorkspaceState& s, ObjectId moving) {
  return ground_destination(phrase_target(t, s), s, moving);
}

/// Phrases each planned skill in the state it will be executed in, assuming
/// the earlier ones succeed.
inline std::vector<SkillInstruction> phrase_plan(const WorkspaceState& start,
                                                 const std::vector<PlannedSkill>& plan) {
  std::vector<SkillInstruction> out;
  WorkspaceState s = start;
  for (const auto& step : plan) {
    out.push_back(phrase_instruction(step.object, step.target, s));
    s = place_object(s, step.object, resolve_target(step.target, s, step.object));
  }
  return out;
}

inline std::vector<SkillInstruction> nominal_plan(const WorkspaceState& initial, const GoalSpec& goal) {
  return phrase_plan(initial, assign_placements(initial, goal));
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json spec_to_json(const ObjectSpec& s) {
  return {{"category", category_key(s.category)}, {"color", std::string(color_name(s.color))}};
}

inline ObjectSpec spec_from_json(const nlohmann::json& j) {
  auto cat = category_from_key(j.at("category").get<std::string>());
  auto col = color_from_name(j.at("color").get<std::string>());
  if (!cat || !col) throw Error(Errc::serialization_error, "bad object spec");
  return {*cat, *col};
}

inline nlohmann::json goal_to_json(const GoalSpec& g) {
  nlohmann::json preds = nlohmann::json::array();
  for (const auto& p : g.predicates) {
    if (const auto* c = std::get_if<InContainerGoal>(&p)) {
      preds.push_back({{"kind", "in"}, {"object", spec_to_json(c->object)}, {"container", spec_to_json(c->container)}});
    } else {
      const auto& st = std::get<OnStandGoal>(p);
      preds.push_back({{"kind", "stand"}, {"object", spec_to_json(st.object)}, {"layer", st.layer}, {"slot", st.slot}});
    }
  }
  return preds;
}

inline GoalSpec goal_from_json(const nlohmann::json& j) {
  GoalSpec g;
  for (const auto& p : j) {
    if (p.at("kind") == "in") {
      g.predicates.push_back(InContainerGoal{spec_from_json(p.at("object")), spec_from_json(p.at("container"))});
    } else {
      g.predicates.push_back(OnStandGoal{spec_from_json(p.at("object")), p.at("layer").get<int>(), p.at("slot").get<int>()});
    }
  }
  return g;
}

inline nlohmann::json episode_to_json(const EpisodeSpec& e) {
  return {{"task", std::string(task_name(e.task))},
          {"sizes", {{"goal_objects", e.sizes.goal_objects}, {"distractors", e.sizes.distractors},
                     {"slot_capacity", e.sizes.slot_capacity}}},
          {"initial", state_to_json(e.initial)},
          {"goal", goal_to_json(e.goal)},
          {"perturb", {{"scenario", std::string(scenario_name(e.perturb.scenario))},
                       {"max_dis_objects", e.perturb.max_dis_objects}}},
          {"failure_prob", e.failure_prob},
          {"seed", e.seed}};
}

inline EpisodeSpec episode_from_json(const nlohmann::json& j) {
  try {
    EpisodeSpec e;
    auto task = task_from_name(j.at("task").get<std::string>());
    auto scen = scenario_from_name(j.at("perturb").at("scenario").get<std::string>());
    if (!task || !scen) throw Error(Errc::serialization_error, "bad task or scenario");
    e.task = *task;
    const auto& sz = j.at("sizes");
    e.sizes = {sz.at("goal_objects").get<int>(), sz.at("distractors").get<int>(), sz.at("slot_capacity").get<int>()};
    e.initial = state_from_json(j.at("initial"));
    e.goal = goal_from_json(j.at("goal"));
    e.perturb = {*scen, j.at("perturb").at("max_dis_objects").get<int>()};
    e.failure_prob = j.at("failure_prob").get<double>();
    e.seed = j.at("seed").get<std::uint64_t>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::serialization_error, ex.what());
  }
}

inline std::uint64_t episode_hash(const EpisodeSpec& e) { return fnv1a64(episode_to_json(e).dump()); }

}  // namespace tlp
