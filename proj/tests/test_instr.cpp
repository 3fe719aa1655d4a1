#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace tlp;
using namespace tlp::tsupport;

TEST(Corpus, EveryLinePasses) {
  const auto corpus = load_corpus();
  ASSERT_GE(corpus.size(), 40u);
  for (const auto& line : corpus) {
    EXPECT_EQ(corpus_line_error(line), "") << "corpus line " << line.lineno << ": " << line.fields.at(1);
  }
}

TEST(Render, CanonicalForms) {
  const auto minimal = make_instruction(ObjectDescriptor{std::nullopt, Category::block, std::nullopt, std::nullopt},
                                        ContainerDest{{Color::brown, Category::box, std::nullopt, std::nullopt}});
  EXPECT_EQ(render_instruction(minimal), "put the block into the brown box");
  const auto discard = make_instruction(ObjectDescriptor{Color::red, Category::block, std::nullopt, std::nullopt}, TrashDest{});
  EXPECT_EQ(discard.verb, Verb::discard);
  const auto text = render_instruction(discard);
  EXPECT_EQ(text.substr(text.size() - 18), "into the trash can");
}

namespace {

std::optional<Color> random_color(Rng& rng) {
  if (rng.bernoulli(0.3)) return std::nullopt;
  const auto c = kAllColors[1 + rng.below(kAllColors.size() - 1)];
  return c;
}

ObjectDescriptor random_descriptor(Rng& rng, bool allow_relation) {
  ObjectDescriptor d;
  d.color = random_color(rng);
  d.category = kAllCategories[rng.below(kAllCategories.size())];
  if (allow_relation && rng.bernoulli(0.4)) {
    Relation r;
    r.kind = rng.bernoulli(0.5) ? RelationKind::in : RelationKind::on;
    r.support.color = random_color(rng);
    r.support.category = kAllCategories[rng.below(kAllCategories.size())];
    d.relation = r;
  }
  if (rng.bernoulli(0.4)) d.region = kAllRegions[rng.below(9)];
  return d;
}

SkillInstruction random_instruction(Rng& rng) {
  auto pick = random_descriptor(rng, true);
  Destination dest;
  switch (rng.below(4)) {
    case 0: dest = TrashDest{}; break;
    case 1: {
      auto c = random_descriptor(rng, false);
      while (c.category == Category::stand || c.category == Category::trash_can) {
        c.category = kAllCategories[rng.below(kAllCategories.size())];
      }
      dest = ContainerDest{c};
      break;
    }
    case 2: {
      const int layer = 1 + static_cast<int>(rng.below(3));
      dest = StandDest{layer, static_cast<int>(rng.below(static_cast<std::size_t>(stand_slots(layer))))};
      break;
    }
    default: dest = TableDest{kAllRegions[rng.below(9)]};
  }
  return make_instruction(pick, dest);
}

}  // namespace

TEST(Render, ParseRenderRoundTrip) {
  Rng rng(31337);
  for (int i = 0; i < 1000; ++i) {
    const auto instr = random_instruction(rng);
    const auto text = render_instruction(instr);
    SkillInstruction back;
    ASSERT_NO_THROW(back = parse_instruction(text)) << text;
    ASSERT_EQ(back, instr) << text;
    ASSERT_EQ(render_instruction(back), text);
  }
}

TEST(Parser, FuzzNeverCrashes) {
  Rng rng(99);
  int parsed = 0;
  for (int i = 0; i < 100000; ++i) {
    const auto text = fuzz_text(rng, i);
    try {
      const auto instr = parse_instruction(text);
      ++parsed;
      ASSERT_EQ(parse_instruction(render_instruction(instr)), instr);
    } catch (const SyntaxError& e) {
      ASSERT_TRUE(e.code() == Errc::syntax_error || e.code() == Errc::unknown_word);
      ASSERT_LE(e.offset(), text.size());
    }
  }
  EXPECT_GE(parsed, 0);
}

namespace {

WorkspaceState sample_scene() {
  // Two red blocks: one in the red bowl, one on the table.
  WorkspaceState s;
  s = add_object(s, {ObjectId{0}, Category::bowl, Color::red, OnTable{Region::bottom_right, 0}});
  s = add_object(s, {ObjectId{1}, Category::block, Color::red, InContainer{ObjectId{0}}});
  s = add_object(s, {ObjectId{2}, Category::block, Color::red, OnTable{Region::top_left, 0}});
  s = add_object(s, {ObjectId{3}, Category::trash_can, Color::none, OnTable{Region::middle_left, 0}});
  s = add_object(s, {ObjectId{4}, Category::block, Color::blue, OnTable{Region::top_left, 1}});
  return s;
}

}  // namespace

TEST(Ground, RelationalDescriptorPicksContainedBlock) {
  const auto s = sample_scene();
  const auto i = parse_instruction("put the red block in the red bowl into the trash can");
  const auto g = ground_instruction(i, s);
  EXPECT_EQ(g.object, ObjectId{1});
  EXPECT_EQ(g.target, Placement{InTrash{}});
}

TEST(Ground, AmbiguousListsCandidates) {
  const auto s = sample_scene();
  try {
    ground(ObjectDescriptor{Color::red, Category::block, std::nullopt, std::nullopt}, s);
    FAIL();
  } catch (const GroundingError& e) {
    EXPECT_EQ(e.code(), Errc::ambiguous);
    EXPECT_EQ(e.candidates(), (std::vector<ObjectId>{ObjectId{1}, ObjectId{2}}));
  }
}

TEST(Ground, NoMatch) {
  const auto s = sample_scene();
  try {
    ground(ObjectDescriptor{Color::green, Category::bowl, std::nullopt, std::nullopt}, s);
    FAIL();
  } catch (const GroundingError& e) {
    EXPECT_EQ(e.code(), Errc::no_match);
  }
}

TEST(Ground, DestinationFullAndFirstFreeSlot) {
  const auto s = sample_scene();
  EXPECT_THROW(ground_destination(ContainerDest{{Color::red, Category::bowl, std::nullopt, std::nullopt}}, s), GroundingError);
  EXPECT_EQ(ground_destination(TableDest{Region::top_left}, s), (Placement{OnTable{Region::top_left, 2}}));
  EXPECT_EQ(ground_destination(TableDest{Region::top_left}, s, ObjectId{2}), (Placement{OnTable{Region::top_left, 0}}));
}

TEST(Descriptor, ShortestQualifierWins) {
  const auto s = sample_scene();
  EXPECT_EQ(render_descriptor(minimal_unique_descriptor(ObjectId{4}, s)), "blue block");
  EXPECT_EQ(render_descriptor(minimal_unique_descriptor(ObjectId{1}, s)), "red block in the red bowl");
  EXPECT_EQ(render_descriptor(minimal_unique_descriptor(ObjectId{2}, s)), "red block at the top left");
}

TEST(Descriptor, RegionQualifierForSeparatedTwins) {
  WorkspaceState s;
  s = add_object(s, {ObjectId{0}, Category::block, Color::red, OnTable{Region::top_left, 0}});
  s = add_object(s, {ObjectId{1}, Category::block, Color::red, OnTable{Region::bottom_right, 0}});
  const auto d = minimal_unique_descriptor(ObjectId{1}, s);
  EXPECT_EQ(d.region, Region::bottom_right);
  EXPECT_FALSE(d.relation);
}

TEST(Descriptor, TrueTieIsNotDistinguishable) {
  WorkspaceState s;
  s = add_object(s, {ObjectId{0}, Category::block, Color::red, OnTable{Region::top_left, 0}});
  s = add_object(s, {ObjectId{1}, Category::block, Color::red, OnTable{Region::top_left, 1}});
  try {
    minimal_unique_descriptor(ObjectId{0}, s);
    FAIL();
  } catch (const GroundingError& e) {
    EXPECT_EQ(e.code(), Errc::not_distinguishable);
  }
  EXPECT_FALSE(all_distinguishable(s, {Category::block, Color::red}));
}

TEST(Ground, BruteForceEquivalenceOnRandomScenes) {
  Rng rng(4242);
  for (int scene = 0; scene < 1000; ++scene) {
    const auto s = tsupport::random_state(rng);
    for (int q = 0; q < 20; ++q) {
      const auto d = scene_descriptor(rng, s);
      const auto expect = oracle_denotation(d, s);
      ASSERT_EQ(denotation(d, s), expect) << render_descriptor(d);
      try {
        const auto id = ground(d, s);
        ASSERT_EQ(expect, std::vector<ObjectId>(1, id));
      } catch (const GroundingError& e) {
        if (expect.empty()) {
          ASSERT_EQ(e.code(), Errc::no_match);
        } else {
          ASSERT_EQ(e.code(), Errc::ambiguous);
          ASSERT_EQ(e.candidates(), expect);
        }
      }
    }
  }
}

TEST(Descriptor, MinimalDescriptorRegroundsOrIsTrueTie) {
  Rng rng(515);
  for (int scene = 0; scene < 1000; ++scene) {
    const auto s = tsupport::random_state(rng);
    for (const auto& [id, o] : s.objects()) {
      if (is_fixture(o.category) || in_trash(o)) continue;
      // Brute force over every descriptor the grammar can say about this object.
      bool expressible = false;
      for (int mask = 0; mask < 8; ++mask) {
        ObjectDescriptor cand{std::nullopt, o.category, std::nullopt, std::nullopt};
        if ((mask & 1) && o.color != Color::none) cand.color = o.color;
        if (mask & 2) cand.relation = relation_of(s, o);
        if (mask & 4) cand.region = oracle_region(s, o);
        if (oracle_denotation(cand, s) == std::vector<ObjectId>(1, id)) expressible = true;
      }
      const bool tie = !expressible;
      try {
        const auto d = minimal_unique_descriptor(id, s);
        ASSERT_FALSE(tie);
        ASSERT_EQ(oracle_denotation(d, s), std::vector<ObjectId>(1, id));
        // Priority: no qualifier is added when color and category suffice.
        ObjectDescriptor base{d.color, d.category, std::nullopt, std::nullopt};
        if (oracle_denotation(base, s).size() == 1) {
          ASSERT_FALSE(d.relation);
          ASSERT_FALSE(d.region);
        }
      } catch (const GroundingError& e) {
        ASSERT_EQ(e.code(), Errc::not_distinguishable);
        ASSERT_TRUE(tie);
      }
    }
  }
}

TEST(Descriptor, FixturesHaveNoDescriptor) {
  const auto s = sample_scene();
  EXPECT_THROW(minimal_unique_descriptor(ObjectId{3}, s), GroundingError);
}
