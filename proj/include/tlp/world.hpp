#pragma once

// Symbolic tabletop: objects on a 3x3 grid of table regions, inside bowls and
// boxes, on a 3-2-1 stand, or discarded into the trash can. States are
// immutable values; every operation returns a new state.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tlp/core.hpp"

namespace tlp {

struct OnTable {
  Region region = Region::top_left;
  int slot = 0;
  auto operator<=>(const OnTable&) const = default;
};

struct InContainer {
  ObjectId container;
  auto operator<=>(const InContainer&) const = default;
};

/// Layer 1 is the base (3 slots), layer 3 the apex (1 slot).
struct OnStand {
  int layer = 1;
  int slot = 0;
  auto operator<=>(const OnStand&) const = default;
};

struct InTrash {
  auto operator<=>(const InTrash&) const = default;
};

using Placement = std::variant<OnTable, InContainer, OnStand, InTrash>;

inline constexpr int kStandLayers = 3;
inline int stand_slots(int layer) { return kStandLayers + 1 - layer; }
inline bool valid_stand_position(int layer, int slot) {
  return layer >= 1 && layer <= kStandLayers && slot >= 0 && slot < stand_slots(layer);
}

struct ObjectInstance {
  ObjectId id;
  Category category = Category::block;
  Color color = Color::none;
  Placement placement = OnTable{};

  ObjectSpec spec() const { return {category, color}; }
  bool operator==(const ObjectInstance&) const = default;
};

/// Which slots to enumerate in free_slots.
struct StandLayer {
  int layer = 1;
};
using SlotQuery = std::variant<Region, ObjectId, StandLayer>;

class WorkspaceState {
 public:
  explicit WorkspaceState(int slot_capacity = 4) : slot_capacity_(slot_capacity) {
    if (slot_capacity < 1) throw Error(Errc::infeasible_config, "slot capacity must be >= 1");
  }

  int slot_capacity() const { return slot_capacity_; }
  const std::map<ObjectId, ObjectInstance>& objects() const { return objects_; }
  std::size_t size() const { return objects_.size(); }

  const ObjectInstance* find(ObjectId id) const {
    auto it = objects_.find(id);
    return it == objects_.end() ? nullptr : &it->second;
  }

  const ObjectInstance& at(ObjectId id) const {
    if (const auto* o = find(id)) return *o;
    throw Error(Errc::unknown_id, "no object with id " + std::to_string(id.value));
  }

  /// Smallest id larger than every id in the state.
  ObjectId next_id() const {
    return objects_.empty() ? ObjectId{0} : ObjectId{objects_.rbegin()->first.value + 1};
  }

  /// First object of the given category (the stand and trash can are unique).
  const ObjectInstance* find_first(Category c) const {
    for (const auto& [id, o] : objects_) {
      if (o.category == c) return &o;
    }
    return nullptr;
  }

  bool operator==(const WorkspaceState&) const = default;

 private:
  friend class StateEditor;
  int slot_capacity_;
  std::map<ObjectId, ObjectInstance> objects_;
};

/// Internal write access; every public entry point validates the result.
class StateEditor {
 public:
  explicit StateEditor(WorkspaceState s) : state_(std::move(s)) {}
  void put(const ObjectInstance& o) { state_.objects_[o.id] = o; }
  void erase(ObjectId id) { state_.objects_.erase(id); }
  void set_placement(ObjectId id, const Placement& p) { state_.objects_.at(id).placement = p; }
  WorkspaceState take() && { return std::move(state_); }

 private:
  WorkspaceState state_;
};

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

/// Object occupying a table slot, a stand position, or (for bowls) the bowl.
inline const ObjectInstance* occupant(const WorkspaceState& s, const Placement& p) {
  for (const auto& [id, o] : s.objects()) {
    if (o.placement == p) return &o;
  }
  return nullptr;
}

inline std::vector<ObjectId> contents(const WorkspaceState& s, ObjectId container) {
  std::vector<ObjectId> out;
  for (const auto& [id, o] : s.objects()) {
    if (const auto* in = std::get_if<InContainer>(&o.placement); in && in->container == container) {
      out.push_back(id);
    }
  }
  return out;
}

/// Table region an object sits in; contained and stacked objects inherit the
/// region of their container or of the stand. Trash has no region.
inline std::optional<Region> effective_region(const WorkspaceState& s, const ObjectInstance& o) {
  const ObjectInstance* cur = &o;
  for (std::size_t guard = 0; guard <= s.size(); ++guard) {
    if (const auto* t = std::get_if<OnTable>(&cur->placement)) return t->region;
    if (const auto* in = std::get_if<InContainer>(&cur->placement)) {
      cur = s.find(in->container);
      if (!cur) return std::nullopt;
      continue;
    }
    if (std::holds_alternative<OnStand>(cur->placement)) {
      const auto* stand = s.find_first(Category::stand);
      if (!stand) return std::nullopt;
      cur = stand;
      continue;
    }
    return std::nullopt;
  }
  return std::nullopt;
}

inline bool stand_occupied(const WorkspaceState& s, int layer, int slot) {
  return occupant(s, OnStand{layer, slot}) != nullptr;
}

inline bool stand_supported(const WorkspaceState& s, int layer, int slot) {
  if (layer == 1) return true;
  return stand_occupied(s, layer - 1, slot) && stand_occupied(s, layer - 1, slot + 1);
}

/// True when something rests on (or inside) the object.
inline bool supports_something(const WorkspaceState& s, const ObjectInstance& o) {
  if (is_container(o.category)) return !contents(s, o.id).empty();
  if (const auto* st = std::get_if<OnStand>(&o.placement)) {
    const int above = st->layer + 1;
    if (above > kStandLayers) return false;
    for (int slot : {st->slot - 1, st->slot}) {
      if (valid_stand_position(above, slot) && stand_occupied(s, above, slot)) return true;
    }
  }
  return false;
}

/// Pickable now: not a fixture, not discarded, nothing resting on it.
inline bool is_pickable(const WorkspaceState& s, const ObjectInstance& o) {
  if (is_fixture(o.category)) return false;
  if (std::holds_alternative<InTrash>(o.placement)) return false;
  return !supports_something(s, o);
}

inline bool in_trash(const ObjectInstance& o) { return std::holds_alternative<InTrash>(o.placement); }

// ---------------------------------------------------------------------------
// Invariants
// ---------------------------------------------------------------------------

/// Throws Error(invariant_violation) describing the first broken invariant.
inline void validate(const WorkspaceState& s) {
  auto fail = [](const std::string& msg) { throw Error(Errc::invariant_violation, msg); };
  std::set<Placement> taken;
  int stands = 0;
  int trash_cans = 0;
  for (const auto& [id, o] : s.objects()) {
    if (o.id != id) fail("object id mismatch");
    if (o.category == Category::stand) ++stands;
    if (o.category == Category::trash_can) ++trash_cans;
    if (is_fixture(o.category) && !std::holds_alternative<OnTable>(o.placement)) {
      fail("fixtures must stand on the table (id " + std::to_string(id.value) + ")");
    }
    if (is_container(o.category) && !std::holds_alternative<OnTable>(o.placement) && !in_trash(o)) {
      fail("containers must stand on the table or be discarded (id " + std::to_string(id.value) + ")");
    }
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, OnTable>) {
            if (p.slot < 0 || p.slot >= s.slot_capacity()) fail("table slot out of range");
            if (!taken.insert(o.placement).second) fail("two objects share a table slot");
          } else if constexpr (std::is_same_v<P, InContainer>) {
            const auto* c = s.find(p.container);
            if (!c) fail("containment references a missing object");
            if (!is_container(c->category)) fail("containment target is not a container");
            if (in_trash(*c)) fail("containment target is in the trash");
            if (c->id == o.id) fail("object contains itself");
            if (c->category == Category::bowl && contents(s, c->id).size() > 1) {
              fail("bowl holds more than one object");
            }
          } else if constexpr (std::is_same_v<P, OnStand>) {
            if (!valid_stand_position(p.layer, p.slot)) fail("stand position out of range");
            if (!s.find_first(Category::stand)) fail("object on a missing stand");
            if (!taken.insert(o.placement).second) fail("two objects share a stand slot");
            if (!stand_supported(s, p.layer, p.slot)) fail("stand slot lacks support");
          } else {
            if (!s.find_first(Category::trash_can)) fail("object in a missing trash can");
          }
        },
        o.placement);
  }
  if (stands > 1) fail("more than one stand");
  if (trash_cans > 1) fail("more than one trash can");
  // Items may only sit in containers that are on the table, so containment
  // chains have length one and cannot form cycles.
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Adds a new object (scene construction and perturbation injection).
inline WorkspaceState add_object(const WorkspaceState& s, const ObjectInstance& o) {
  if (s.find(o.id)) throw Error(Errc::invariant_violation, "duplicate id " + std::to_string(o.id.value));
  StateEditor ed(s);
  ed.put(o);
  auto out = std::move(ed).take();
  validate(out);
  return out;
}

inline WorkspaceState remove_object(const WorkspaceState& s, ObjectId id) {
  const auto& o = s.at(id);
  if (supports_something(s, o)) {
    throw Error(Errc::immovable_object, "object " + std::to_string(id.value) + " supports other objects");
  }
  StateEditor ed(s);
  ed.erase(id);
  auto out = std::move(ed).take();
  validate(out);
  return out;
}

/// Relocates a movable object. The input state is left untouched.
inline WorkspaceState place_object(const WorkspaceState& s, ObjectId id, const Placement& target) {
  const auto& o = s.at(id);
  if (is_fixture(o.category) || in_trash(o)) {
    throw Error(Errc::immovable_object, std::string(category_name(o.category)) + " cannot be moved");
  }
  if (supports_something(s, o)) {
    throw Error(Errc::immovable_object, "object " + std::to_string(id.value) + " supports other objects");
  }
  if (!is_item(o.category) && !std::holds_alternative<OnTable>(target) &&
      !std::holds_alternative<InTrash>(target)) {
    throw Error(Errc::immovable_object, "containers can only be placed on the table or discarded");
  }
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, OnTable>) {
          if (p.slot < 0 || p.slot >= s.slot_capacity()) {
            throw Error(Errc::slot_occupied, "table slot out of range");
          }
          const auto* occ = occupant(s, target);
          if (occ && occ->id != id) throw Error(Errc::slot_occupied, "table slot taken");
        } else if constexpr (std::is_same_v<P, InContainer>) {
          const auto* c = s.find(p.container);
          if (!c) throw Error(Errc::unknown_id, "no container " + std::to_string(p.container.value));
          if (!is_container(c->category)) throw Error(Errc::unknown_container, "not a container");
          if (c->category == Category::bowl) {
            for (auto held : contents(s, c->id)) {
              if (held != id) throw Error(Errc::slot_occupied, "bowl already holds an object");
            }
          }
        } else if constexpr (std::is_same_v<P, OnStand>) {
          if (!s.find_first(Category::stand)) throw Error(Errc::unknown_container, "no stand");
          if (!valid_stand_position(p.layer, p.slot)) {
            throw Error(Errc::unsupported_stand_slot, "no such stand position");
          }
          const auto* occ = occupant(s, target);
          if (occ && occ->id != id) throw Error(Errc::slot_occupied, "stand slot taken");
          if (!stand_supported(s, p.layer, p.slot)) {
            throw Error(Errc::unsupported_stand_slot,
                        "layer " + std::to_string(p.layer) + " slot " + std::to_string(p.slot) +
                            " needs both supports below");
          }
        } else {
          if (!s.find_first(Category::trash_can)) throw Error(Errc::unknown_container, "no trash can");
        }
      },
      target);
  StateEditor ed(s);
  ed.set_placement(id, target);
  auto out = std::move(ed).take();
  validate(out);
  return out;
}

/// Unoccupied, support-valid placements in deterministic order. Unbounded
/// containers yield a single In(c) entry.
inline std::vector<Placement> free_slots(const WorkspaceState& s, const SlotQuery& where) {
  std::vector<Placement> out;
  if (const auto* r = std::get_if<Region>(&where)) {
    for (int slot = 0; slot < s.slot_capacity(); ++slot) {
      Placement p = OnTable{*r, slot};
      if (!occupant(s, p)) out.push_back(p);
    }
  } else if (const auto* cid = std::get_if<ObjectId>(&where)) {
    const auto* c = s.find(*cid);
    if (!c || !is_container(c->category)) {
      throw Error(Errc::unknown_container, "no container " + std::to_string(cid->value));
    }
    if (c->category == Category::box || contents(s, c->id).empty()) out.push_back(InContainer{c->id});
  } else {
    const int layer = std::get<StandLayer>(where).layer;
    if (!s.find_first(Category::stand) || layer < 1 || layer > kStandLayers) {
      throw Error(Errc::unknown_container, "no stand layer " + std::to_string(layer));
    }
    for (int slot = 0; slot < stand_slots(layer); ++slot) {
      if (!stand_occupied(s, layer, slot) && stand_supported(s, layer, slot)) {
        out.push_back(OnStand{layer, slot});
      }
    }
  }
  return out;
}

/// Every free table slot, regions in canonical order.
inline std::vector<Placement> free_table_slots(const WorkspaceState& s) {
  std::vector<Placement> out;
  for (auto r : kAllRegions) {
    auto part = free_slots(s, r);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Deltas
// ---------------------------------------------------------------------------

struct Move {
  ObjectId id;
  Placement from;
  Placement to;
  bool operator==(const Move&) const = default;
};

struct StateDelta {
  std::vector<ObjectInstance> added;
  std::vector<ObjectInstance> removed;
  std::vector<Move> moved;

  bool empty() const { return added.empty() && removed.empty() && moved.empty(); }
  bool operator==(const StateDelta&) const = default;
};

inline WorkspaceState apply_delta(const WorkspaceState& s, const StateDelta& d) {
  auto fail = [](const std::string& msg) -> void { throw Error(Errc::inconsistent_delta, msg); };
  // An id may be removed and re-added (a replaced object); otherwise each id
  // appears at most once.
  std::set<ObjectId> removed;
  std::set<ObjectId> moved;
  std::set<ObjectId> added;
  for (const auto& o : d.removed) {
    if (!removed.insert(o.id).second) fail("object listed twice");
  }
  for (const auto& m : d.moved) {
    if (removed.count(m.id) || !moved.insert(m.id).second) fail("object listed twice");
  }
  for (const auto& o : d.added) {
    if (moved.count(o.id) || !added.insert(o.id).second) fail("object listed twice");
  }
  StateEditor ed(s);
  for (const auto& o : d.removed) {
    const auto* cur = s.find(o.id);
    if (!cur || !(*cur == o)) fail("removed object " + std::to_string(o.id.value) + " not present as described");
    ed.erase(o.id);
  }
  for (const auto& m : d.moved) {
    const auto* cur = s.find(m.id);
    if (!cur || cur->placement != m.from) fail("moved object " + std::to_string(m.id.value) + " not at its origin");
    ed.set_placement(m.id, m.to);
  }
  for (const auto& o : d.added) {
    if (s.find(o.id) && !removed.count(o.id)) fail("added object " + std::to_string(o.id.value) + " already exists");
    ed.put(o);
  }
  auto out = std::move(ed).take();
  try {
    validate(out);
  } catch (const Error& e) {
    throw Error(Errc::inconsistent_delta, e.what());
  }
  return out;
}

/// apply_delta(pre, diff(pre, post)) == post whenever both share a capacity.
inline StateDelta diff(const WorkspaceState& pre, const WorkspaceState& post) {
  StateDelta d;
  for (const auto& [id, o] : pre.objects()) {
    const auto* after = post.find(id);
    if (!after || after->category != o.category || after->color != o.color) {
      d.removed.push_back(o);
      if (after) d.added.push_back(*after);
    } else if (after->placement != o.placement) {
      d.moved.push_back({id, o.placement, after->placement});
    }
  }
  for (const auto& [id, o] : post.objects()) {
    if (!pre.find(id)) d.added.push_back(o);
  }
  std::sort(d.added.begin(), d.added.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return d;
}

// ---------------------------------------------------------------------------
// Canonical serialization
// ---------------------------------------------------------------------------

inline nlohmann::json placement_to_json(const Placement& p) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using P = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<P, OnTable>) {
          return {{"kind", "table"}, {"region", region_key(v.region)}, {"slot", v.slot}};
        } else if constexpr (std::is_same_v<P, InContainer>) {
          return {{"kind", "in"}, {"container", v.container.value}};
        } else if constexpr (std::is_same_v<P, OnStand>) {
          return {{"kind", "stand"}, {"layer", v.layer}, {"slot", v.slot}};
        } else {
          return {{"kind", "trash"}};
        }
      },
      p);
}

inline Placement placement_from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "table") {
      auto r = region_from_key(j.at("region").get<std::string>());
      if (!r) throw Error(Errc::serialization_error, "bad region");
      return OnTable{*r, j.at("slot").get<int>()};
    }
    if (kind == "in") return InContainer{ObjectId{j.at("container").get<std::uint32_t>()}};
    if (kind == "stand") return OnStand{j.at("layer").get<int>(), j.at("slot").get<int>()};
    if (kind == "trash") return InTrash{};
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::serialization_error, e.what());
  }
  throw Error(Errc::serialization_error, "unknown placement kind");
}

inline nlohmann::json object_to_json(const ObjectInstance& o) {
  return {{"id", o.id.value},
          {"category", category_key(o.category)},
          {"color", std::string(color_name(o.color))},
          {"placement", placement_to_json(o.placement)}};
}

inline ObjectInstance object_from_json(const nlohmann::json& j) {
  try {
    auto cat = category_from_key(j.at("category").get<std::string>());
    auto col = color_from_name(j.at("color").get<std::string>());
    if (!cat || !col) throw Error(Errc::serialization_error, "bad category or color");
    return {ObjectId{j.at("id").get<std::uint32_t>()}, *cat, *col, placement_from_json(j.at("placement"))};
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::serialization_error, e.what());
  }
}

/// Keys are sorted (nlohmann::json objects are ordered maps), objects by id.
inline nlohmann::json state_to_json(const WorkspaceState& s) {
  nlohmann::json objs = nlohmann::json::array();
  for (const auto& [id, o] : s.objects()) objs.push_back(object_to_json(o));
  return {{"slot_capacity", s.slot_capacity()}, {"objects", std::move(objs)}};
}

inline WorkspaceState state_from_json(const nlohmann::json& j) {
  try {
    StateEditor ed(WorkspaceState(j.at("slot_capacity").get<int>()));
    for (const auto& o : j.at("objects")) ed.put(object_from_json(o));
    auto out = std::move(ed).take();
    validate(out);
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::serialization_error, e.what());
  }
}

inline std::string canonical_text(const WorkspaceState& s) { return state_to_json(s).dump(); }
inline std::uint64_t state_hash(const WorkspaceState& s) { return fnv1a64(canonical_text(s)); }

}  // namespace tlp
