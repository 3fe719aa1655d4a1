#include <gtest/gtest.h>

#include "support.hpp"

using namespace tlp;

namespace {

WorkspaceState two_block_scene() {
  WorkspaceState s;
  s = add_object(s, {ObjectId{0}, Category::block, Color::red, OnTable{Region::top_left, 0}});
  s = add_object(s, {ObjectId{1}, Category::bowl, Color::red, OnTable{Region::middle_center, 0}});
  s = add_object(s, {ObjectId{2}, Category::block, Color::blue, OnTable{Region::top_left, 1}});
  return s;
}

WorkspaceState with_stand() {
  WorkspaceState s;
  s = add_object(s, {ObjectId{0}, Category::stand, Color::none, OnTable{Region::bottom_center, 0}});
  for (std::uint32_t i = 1; i <= 4; ++i) {
    s = add_object(s, {ObjectId{i}, Category::block, kBlockColors[i - 1], OnTable{Region::top_left, static_cast<int>(i % 4)}});
  }
  return s;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::config_error;
}

}  // namespace

TEST(PlaceObject, MovesIntoBowl) {
  const auto s = two_block_scene();
  const auto t = place_object(s, ObjectId{0}, InContainer{ObjectId{1}});
  EXPECT_EQ(t.at(ObjectId{0}).placement, Placement{InContainer{ObjectId{1}}});
  EXPECT_EQ(contents(t, ObjectId{1}), std::vector<ObjectId>{ObjectId{0}});
  // Input untouched.
  EXPECT_EQ(s.at(ObjectId{0}).placement, (Placement{OnTable{Region::top_left, 0}}));
  EXPECT_EQ(effective_region(t, t.at(ObjectId{0})), Region::middle_center);
}

TEST(PlaceObject, OccupiedSlot) {
  const auto s = two_block_scene();
  EXPECT_EQ(code_of([&] { place_object(s, ObjectId{0}, OnTable{Region::top_left, 1}); }), Errc::slot_occupied);
}

TEST(PlaceObject, FullBowl) {
  auto s = two_block_scene();
  s = place_object(s, ObjectId{0}, InContainer{ObjectId{1}});
  EXPECT_EQ(code_of([&] { place_object(s, ObjectId{2}, InContainer{ObjectId{1}}); }), Errc::slot_occupied);
}

TEST(PlaceObject, UnsupportedStandSlot) {
  const auto s = with_stand();
  EXPECT_EQ(code_of([&] { place_object(s, ObjectId{1}, OnStand{2, 0}); }), Errc::unsupported_stand_slot);
}

TEST(PlaceObject, ImmovableAndUnknown) {
  const auto s = with_stand();
  EXPECT_EQ(code_of([&] { place_object(s, ObjectId{0}, OnTable{Region::top_right, 0}); }), Errc::immovable_object);
  EXPECT_EQ(code_of([&] { place_object(s, ObjectId{99}, OnTable{Region::top_right, 0}); }), Errc::unknown_id);
  EXPECT_EQ(code_of([&] { place_object(s, ObjectId{1}, InContainer{ObjectId{2}}); }), Errc::unknown_container);
}

TEST(PlaceObject, SupportRuleBlocksRemoval) {
  auto s = with_stand();
  s = place_object(s, ObjectId{1}, OnStand{1, 0});
  s = place_object(s, ObjectId{2}, OnStand{1, 1});
  s = place_object(s, ObjectId{3}, OnStand{2, 0});
  EXPECT_FALSE(is_pickable(s, s.at(ObjectId{1})));
  EXPECT_EQ(code_of([&] { place_object(s, ObjectId{1}, OnTable{Region::top_right, 0}); }), Errc::immovable_object);
  EXPECT_TRUE(is_pickable(s, s.at(ObjectId{3})));
}

TEST(FreeSlots, RegionCounts) {
  WorkspaceState s;
  EXPECT_EQ(free_slots(s, Region::middle_left).size(), 4u);
  for (int i = 0; i < 4; ++i) {
    s = add_object(s, {ObjectId{static_cast<std::uint32_t>(i)}, Category::block, Color::red, OnTable{Region::middle_left, i}});
  }
  EXPECT_TRUE(free_slots(s, Region::middle_left).empty());
  EXPECT_EQ(free_table_slots(s).size(), 32u);
}

TEST(FreeSlots, StandPyramidCounts) {
  auto s = with_stand();
  EXPECT_EQ(free_slots(s, StandLayer{1}).size(), 3u);
  EXPECT_TRUE(free_slots(s, StandLayer{2}).empty());
  for (int slot = 0; slot < 3; ++slot) s = place_object(s, ObjectId{static_cast<std::uint32_t>(slot + 1)}, OnStand{1, slot});
  EXPECT_EQ(free_slots(s, StandLayer{2}).size(), 2u);
  EXPECT_TRUE(free_slots(s, StandLayer{3}).empty());
}

TEST(FreeSlots, UnknownContainer) {
  const auto s = two_block_scene();
  EXPECT_EQ(code_of([&] { free_slots(s, ObjectId{0}); }), Errc::unknown_container);
  EXPECT_EQ(code_of([&] { free_slots(s, StandLayer{1}); }), Errc::unknown_container);
}

// Exhaustive check of the support rule: for every subset of the six stand
// positions, a position is enumerated free iff it is empty and (layer 1 or
// both supports occupied).
TEST(FreeSlots, SupportRuleExhaustive) {
  std::vector<std::pair<int, int>> positions;
  for (int l = 1; l <= 3; ++l) {
    for (int k = 0; k < stand_slots(l); ++k) positions.push_back({l, k});
  }
  for (int mask = 0; mask < 64; ++mask) {
    auto occupied = [&](int l, int k) {
      for (std::size_t i = 0; i < positions.size(); ++i) {
        if (positions[i] == std::pair{l, k}) return ((mask >> i) & 1) != 0;
      }
      return false;
    };
    bool valid = true;
    for (auto [l, k] : positions) {
      if (l > 1 && occupied(l, k) && !(occupied(l - 1, k) && occupied(l - 1, k + 1))) valid = false;
    }
    if (!valid) continue;
    StateEditor ed(WorkspaceState{});
    ed.put({ObjectId{0}, Category::stand, Color::none, OnTable{Region::middle_center, 0}});
    std::uint32_t id = 1;
    for (std::size_t i = 0; i < positions.size(); ++i) {
      if ((mask >> i) & 1) ed.put({ObjectId{id++}, Category::block, Color::red, OnStand{positions[i].first, positions[i].second}});
    }
    auto s = std::move(ed).take();
    ASSERT_NO_THROW(validate(s));
    for (int l = 1; l <= 3; ++l) {
      std::set<int> got;
      for (const auto& p : free_slots(s, StandLayer{l})) got.insert(std::get<OnStand>(p).slot);
      for (int k = 0; k < stand_slots(l); ++k) {
        const bool expect = !occupied(l, k) && (l == 1 || (occupied(l - 1, k) && occupied(l - 1, k + 1)));
        EXPECT_EQ(got.count(k) == 1, expect) << "mask " << mask << " layer " << l << " slot " << k;
      }
    }
  }
}

TEST(Validate, RejectsBrokenStates) {
  StateEditor ed(WorkspaceState{});
  ed.put({ObjectId{0}, Category::block, Color::red, OnTable{Region::middle_center, 0}});
  ed.put({ObjectId{1}, Category::block, Color::blue, OnTable{Region::middle_center, 0}});
  EXPECT_EQ(code_of([&] { validate(std::move(ed).take()); }), Errc::invariant_violation);

  StateEditor ed2(WorkspaceState{});
  ed2.put({ObjectId{0}, Category::block, Color::red, InTrash{}});
  EXPECT_EQ(code_of([&] { validate(std::move(ed2).take()); }), Errc::invariant_violation);

  StateEditor ed3(WorkspaceState{});
  ed3.put({ObjectId{0}, Category::stand, Color::none, InTrash{}});
  EXPECT_EQ(code_of([&] { validate(std::move(ed3).take()); }), Errc::invariant_violation);
}

TEST(Delta, EmptyDeltaIsIdentity) {
  const auto s = two_block_scene();
  EXPECT_EQ(apply_delta(s, {}), s);
  EXPECT_TRUE(diff(s, s).empty());
}

TEST(Delta, AddIncreasesCount) {
  const auto s = two_block_scene();
  StateDelta d;
  d.added.push_back({ObjectId{7}, Category::bowl, Color::green, OnTable{Region::bottom_right, 0}});
  EXPECT_EQ(apply_delta(s, d).size(), s.size() + 1);
}

TEST(Delta, MoveOntoOccupiedSlotIsInconsistent) {
  const auto s = two_block_scene();
  StateDelta d;
  d.moved.push_back({ObjectId{0}, OnTable{Region::top_left, 0}, OnTable{Region::top_left, 1}});
  EXPECT_EQ(code_of([&] { apply_delta(s, d); }), Errc::inconsistent_delta);
}

TEST(Delta, OnePlacementIsOneMove) {
  const auto s = two_block_scene();
  const auto t = place_object(s, ObjectId{0}, InContainer{ObjectId{1}});
  const auto d = diff(s, t);
  ASSERT_EQ(d.moved.size(), 1u);
  EXPECT_TRUE(d.added.empty());
  EXPECT_TRUE(d.removed.empty());
}

namespace {

/// Up to 10 random legal operations (place, add, remove).
WorkspaceState random_walk(const WorkspaceState& start, Rng& rng) {
  auto s = start;
  for (int op = 0; op < 10; ++op) {
    const auto roll = rng.below(3);
    std::vector<ObjectId> movable;
    for (const auto& [id, o] : s.objects()) {
      if (is_pickable(s, o)) movable.push_back(id);
    }
    if (roll == 0 && !movable.empty()) {
      const auto id = rng.pick(movable);
      const auto& o = s.at(id);
      StateEditor lift(s);
      lift.erase(id);
      auto lifted = std::move(lift).take();
      auto options = is_item(o.category) ? tsupport::item_placements(lifted) : free_table_slots(lifted);
      if (!options.empty()) s = place_object(s, id, rng.pick(options));
    } else if (roll == 1) {
      auto options = tsupport::item_placements(s);
      if (!options.empty()) s = add_object(s, {s.next_id(), Category::block, Color::green, rng.pick(options)});
    } else if (!movable.empty()) {
      s = remove_object(s, rng.pick(movable));
    }
  }
  return s;
}

}  // namespace

TEST(Delta, RoundTripProperty) {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto pre = tsupport::random_state(rng);
    const auto post = random_walk(pre, rng);
    const auto d = diff(pre, post);
    ASSERT_EQ(apply_delta(pre, d), post) << "case " << i;
    ASSERT_EQ(diff(pre, apply_delta(pre, d)), d);
  }
}

TEST(Invariants, RandomStatesNeverShareSlots) {
  Rng rng(77);
  for (int i = 0; i < 1000; ++i) {
    const auto s = random_walk(tsupport::random_state(rng), rng);
    std::set<Placement> seen;
    for (const auto& [id, o] : s.objects()) {
      if (std::holds_alternative<OnTable>(o.placement) || std::holds_alternative<OnStand>(o.placement)) {
        ASSERT_TRUE(seen.insert(o.placement).second);
      }
      if (const auto* st = std::get_if<OnStand>(&o.placement); st && st->layer > 1) {
        ASSERT_TRUE(stand_occupied(s, st->layer - 1, st->slot) && stand_occupied(s, st->layer - 1, st->slot + 1));
      }
    }
  }
}

TEST(Serialization, JsonRoundTripAndStableHash) {
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const auto s = tsupport::random_state(rng);
    const auto back = state_from_json(nlohmann::json::parse(canonical_text(s)));
    ASSERT_EQ(back, s);
    ASSERT_EQ(state_hash(back), state_hash(s));
  }
}

TEST(Serialization, CanonicalTextIsKeySorted) {
  const auto s = two_block_scene();
  const auto text = canonical_text(s);
  EXPECT_EQ(text, nlohmann::json::parse(text).dump());
  EXPECT_EQ(state_hash(s), fnv1a64(text));
}
