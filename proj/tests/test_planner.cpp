#include <gtest/gtest.h>

#include "support.hpp"

using namespace tlp;

namespace {

constexpr ObjectId kRed{0};
constexpr ObjectId kBlue{1};
constexpr ObjectId kYellow{7};

/// Matching with three pairs, a trash can and one yellow distractor block.
EpisodeSpec matching_scene() {
  WorkspaceState s;
  s = add_object(s, {ObjectId{0}, Category::block, Color::red, OnTable{Region::top_left, 0}});
  s = add_object(s, {ObjectId{1}, Category::block, Color::blue, OnTable{Region::top_center, 0}});
  s = add_object(s, {ObjectId{2}, Category::block, Color::green, OnTable{Region::top_right, 0}});
  s = add_object(s, {ObjectId{3}, Category::bowl, Color::red, OnTable{Region::bottom_left, 0}});
  s = add_object(s, {ObjectId{4}, Category::bowl, Color::blue, OnTable{Region::bottom_center, 0}});
  s = add_object(s, {ObjectId{5}, Category::bowl, Color::green, OnTable{Region::bottom_right, 0}});
  s = add_object(s, {ObjectId{6}, Category::trash_can, Color::none, OnTable{Region::middle_left, 0}});
  s = add_object(s, {ObjectId{7}, Category::block, Color::yellow, OnTable{Region::middle_right, 0}});
  GoalSpec goal;
  for (auto c : {Color::red, Color::blue, Color::green}) {
    goal.predicates.push_back(InContainerGoal{{Category::block, c}, {Category::bowl, c}});
  }
  EpisodeSpec e;
  e.task = TaskKind::matching;
  e.sizes = resolve_sizes(TaskKind::matching, {3, 1, 4});
  e.initial = s;
  e.goal = goal;
  return e;
}

ObjectSpec block(Color c) { return {Category::block, c}; }

MonitorReport ok(std::vector<PerturbAnswer> r2 = {NoPerturbation{}}) {
  MonitorReport r;
  r.r2 = std::move(r2);
  return r;
}

MonitorReport failed_at(Region r, ObjectSpec what, std::vector<PerturbAnswer> r2 = {NoPerturbation{}}) {
  MonitorReport rep;
  rep.r1 = {false, DropReport{what, r}};
  rep.r2 = std::move(r2);
  return rep;
}

ContainerLocation bowl(Color c) { return {ObjectDescriptor{c, Category::bowl, std::nullopt, std::nullopt}}; }

std::string said(const Decision& d) { return render_decision(d); }

Belief initial_belief(const EpisodeSpec& e) {
  return {e.initial, assign_placements(e.initial, e.goal), satisfied_mask(e.initial, e.goal)};
}

}  // namespace

TEST(Names, RoundTrip) {
  for (auto k : kAllPlanners) EXPECT_EQ(planner_from_name(planner_name(k)), k);
  EXPECT_EQ(planner_from_name("language"), PlannerKind::language);
  EXPECT_FALSE(planner_from_name("saycan"));
  EXPECT_THROW(make_planner(PlannerKind::language, matching_scene()), Error);
}

TEST(Belief, SuccessAdvancesByIntendedEffect) {
  const auto e = matching_scene();
  const auto instr = parse_instruction("put the red block into the red bowl");
  const auto upd = update_belief(initial_belief(e), e.goal, instr, ok());
  EXPECT_EQ(upd.belief.believed, place_object(e.initial, kRed, InContainer{ObjectId{3}}));
  EXPECT_TRUE(upd.effects.empty());
  EXPECT_EQ(upd.belief.satisfied, (std::vector<bool>{true, false, false}));
}

TEST(Belief, FailureDropsAtReportedRegion) {
  const auto e = matching_scene();
  const auto instr = parse_instruction("put the red block into the red bowl");
  const auto upd = update_belief(initial_belief(e), e.goal, instr, failed_at(Region::middle_center, block(Color::red)));
  EXPECT_EQ(effective_region(upd.belief.believed, upd.belief.believed.at(kRed)), Region::middle_center);
}

TEST(Belief, UnknownObjectIsGroundingFailure) {
  const auto e = matching_scene();
  try {
    update_belief(initial_belief(e), e.goal, std::nullopt,
                  ok({RemovedEntry{block(Color::cyan), TableLocation{Region::top_left}}}));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::belief_grounding_failure);
  }
}

TEST(Belief, MovedPendingObjectIsReground) {
  const auto e = matching_scene();
  HCoTPlanner p(e);
  EXPECT_EQ(said(p.next_decision(nullptr)), "put the red block into the red bowl");
  const auto rep = ok({MovedEntry{block(Color::blue), TableLocation{Region::top_center}, TableLocation{Region::middle_center}}});
  EXPECT_EQ(said(p.next_decision(&rep)), "put the blue block into the blue bowl");
  const auto& believed = p.belief()->believed;
  EXPECT_EQ(effective_region(believed, believed.at(kBlue)), Region::middle_center);
  ASSERT_TRUE(p.last_verdict());
  ASSERT_EQ(p.last_verdict()->impacts.size(), 1u);
  EXPECT_EQ(p.last_verdict()->impacts[0].action, ImpactAction::reground);
}

TEST(Layers, RemovingSoleRequiredBlockIsInfeasible) {
  const auto e = matching_scene();
  const auto b = initial_belief(e);
  const auto upd = update_belief(b, e.goal, std::nullopt,
                                 ok({RemovedEntry{block(Color::red), TableLocation{Region::top_left}}}));
  const auto v = hcot_evaluate(upd.belief, e.goal, upd);
  EXPECT_FALSE(v.feasible);
  EXPECT_NE(v.feasibility_explanation.find("red block"), std::string::npos);
  EXPECT_FALSE(v.progress_explanation.empty());
  EXPECT_FALSE(v.operations_explanation.empty());
}

TEST(Layers, DisplacedPlacedBlockViolatesProgress) {
  const auto e = matching_scene();
  auto b = initial_belief(e);
  b = update_belief(b, e.goal, parse_instruction("put the red block into the red bowl"), ok()).belief;
  const auto upd = update_belief(b, e.goal, std::nullopt,
                                 ok({MovedEntry{block(Color::red), bowl(Color::red), TableLocation{Region::middle_center}}}));
  const auto v = hcot_evaluate(upd.belief, e.goal, upd);
  EXPECT_TRUE(v.feasible);
  EXPECT_FALSE(v.progress_intact);
  EXPECT_EQ(v.violated, std::vector<std::size_t>{0});
  const auto plan = corrective_plan(v, upd.belief, e.goal, std::nullopt);
  ASSERT_EQ(plan.instructions.size(), 1u);
  EXPECT_EQ(render_instruction(plan.instructions[0]), "put the red block into the red bowl");
}

TEST(Layers, LookalikeAdditionIsListedAgainstPendingStep) {
  const auto e = matching_scene();
  auto b = initial_belief(e);
  b = update_belief(b, e.goal, parse_instruction("put the red block into the red bowl"), ok()).belief;
  const auto upd = update_belief(b, e.goal, std::nullopt,
                                 ok({AddedEntry{block(Color::blue), TableLocation{Region::middle_center}}}));
  const auto v = hcot_evaluate(upd.belief, e.goal, upd);
  EXPECT_TRUE(v.feasible);
  EXPECT_TRUE(v.progress_intact);
  ASSERT_EQ(v.impacts.size(), 1u);
  EXPECT_EQ(v.impacts[0].action, ImpactAction::discard);
  EXPECT_EQ(v.impacts[0].object_phrase, "blue block");
  EXPECT_EQ(v.impacts[0].affected_instruction, "the blue block is in the blue bowl");
  const auto plan = corrective_plan(v, upd.belief, e.goal, std::nullopt);
  ASSERT_EQ(plan.instructions.size(), 1u);
  EXPECT_EQ(render_instruction(plan.instructions[0]), "put the blue block at the middle center into the trash can");
}

TEST(Layers, DistractorAdditionNeedsNoCorrective) {
  const auto e = matching_scene();
  const auto b = initial_belief(e);
  const auto upd = update_belief(b, e.goal, std::nullopt,
                                 ok({AddedEntry{{Category::bowl, Color::yellow}, TableLocation{Region::middle_center}}}));
  const auto v = hcot_evaluate(upd.belief, e.goal, upd);
  EXPECT_TRUE(v.impacts.empty());
  EXPECT_TRUE(corrective_plan(v, upd.belief, e.goal, std::nullopt).correctives.empty());
}

TEST(Layers, BowlOccupantIsDiscarded) {
  const auto e = matching_scene();
  const auto b = initial_belief(e);
  const auto upd =
      update_belief(b, e.goal, std::nullopt, ok({AddedEntry{block(Color::cyan), bowl(Color::green)}}));
  const auto v = hcot_evaluate(upd.belief, e.goal, upd);
  ASSERT_EQ(v.impacts.size(), 1u);
  EXPECT_EQ(v.impacts[0].affected_instruction, "the green block is in the green bowl");
}

TEST(HCoT, FailureWithRelatedAdditionDiscardsThenRetries) {
  const auto e = matching_scene();
  HCoTPlanner p(e);
  EXPECT_EQ(said(p.next_decision(nullptr)), "put the red block into the red bowl");
  const auto rep = failed_at(Region::middle_right, block(Color::red),
                             {AddedEntry{block(Color::red), TableLocation{Region::middle_center}}});
  EXPECT_EQ(said(p.next_decision(&rep)), "put the red block at the middle center into the trash can");
  EXPECT_NE(p.monologue().find("Feasibility:"), std::string::npos);
  const auto ok_rep = ok();
  EXPECT_EQ(said(p.next_decision(&ok_rep)), "put the red block into the red bowl");
  EXPECT_EQ(said(p.next_decision(&ok_rep)), "put the blue block into the blue bowl");
}

TEST(HCoT, MixedAdditionAndDisplacementHandledTogether) {
  const auto e = matching_scene();
  HCoTPlanner p(e);
  p.next_decision(nullptr);
  const auto step1 = ok();
  EXPECT_EQ(said(p.next_decision(&step1)), "put the blue block into the blue bowl");
  const auto rep = ok({AddedEntry{block(Color::green), TableLocation{Region::middle_center}},
                       MovedEntry{block(Color::red), bowl(Color::red), TableLocation{Region::top_right}}});
  EXPECT_EQ(said(p.next_decision(&rep)), "put the green block at the middle center into the trash can");
  ASSERT_TRUE(p.last_verdict());
  EXPECT_EQ(p.last_verdict()->violated, std::vector<std::size_t>{0});
  EXPECT_EQ(p.last_verdict()->impacts.size(), 1u);
  const auto next = ok();
  EXPECT_EQ(said(p.next_decision(&next)), "put the red block into the red bowl");
  EXPECT_EQ(said(p.next_decision(&next)), "put the green block into the green bowl");
  EXPECT_EQ(said(p.next_decision(&next)), "done");
}

TEST(HCoT, DistractorRemovalProceeds) {
  const auto e = matching_scene();
  HCoTPlanner p(e);
  p.next_decision(nullptr);
  const auto rep = ok({RemovedEntry{block(Color::yellow), TableLocation{Region::middle_right}}});
  EXPECT_EQ(said(p.next_decision(&rep)), "put the blue block into the blue bowl");
  EXPECT_FALSE(p.belief()->believed.find(kYellow));
}

TEST(HCoT, RelatedRemovalAlerts) {
  const auto e = matching_scene();
  HCoTPlanner p(e);
  p.next_decision(nullptr);
  const auto rep = ok({RemovedEntry{block(Color::green), TableLocation{Region::top_right}}});
  EXPECT_EQ(said(p.next_decision(&rep)), "alert");
}

TEST(FlatReplan, DiscardsDistractorAndAlertsOnAnyRemoval) {
  const auto e = matching_scene();
  {
    FlatReplanPlanner p(e);
    p.next_decision(nullptr);
    const auto rep = ok({AddedEntry{{Category::bowl, Color::yellow}, TableLocation{Region::middle_center}}});
    EXPECT_EQ(said(p.next_decision(&rep)), "put the yellow bowl into the trash can");
  }
  {
    FlatReplanPlanner p(e);
    p.next_decision(nullptr);
    const auto rep = ok({RemovedEntry{block(Color::yellow), TableLocation{Region::middle_right}}});
    EXPECT_EQ(said(p.next_decision(&rep)), "alert");
  }
}

TEST(FlatReplan, OnlyFirstEntryHandled) {
  const auto e = matching_scene();
  FlatReplanPlanner p(e);
  p.next_decision(nullptr);
  const auto step1 = ok();
  p.next_decision(&step1);
  const auto rep = ok({AddedEntry{block(Color::green), TableLocation{Region::middle_center}},
                       MovedEntry{block(Color::red), bowl(Color::red), TableLocation{Region::top_right}}});
  EXPECT_EQ(said(p.next_decision(&rep)), "put the green block at the middle center into the trash can");
  // The displaced red block is never put back.
  const auto next = ok();
  EXPECT_EQ(said(p.next_decision(&next)), "put the green block into the green bowl");
  EXPECT_EQ(said(p.next_decision(&next)), "done");
  EXPECT_FALSE(goal_satisfied(p.belief()->believed, e.goal));
}

TEST(OpenLoop, IgnoresReports) {
  const auto e = matching_scene();
  OpenLoopPlanner p(e);
  const auto plan = nominal_plan(e.initial, e.goal);
  const auto rep = ok({RemovedEntry{block(Color::green), TableLocation{Region::top_right}}});
  for (const auto& step : plan) EXPECT_EQ(said(p.next_decision(&rep)), render_instruction(step));
  EXPECT_EQ(said(p.next_decision(&rep)), "done");
}

// Campaign-level properties over generated episodes.

TEST(Episodes, OracleBeliefTracksTruth) {
  for (auto kind : {PlannerKind::hcot, PlannerKind::flat_replan}) {
    for (auto task : kAllTasks) {
      for (auto sc : kAllScenarios) {
        for (std::size_t i = 0; i < 10; ++i) {
          const auto spec = generate_episode(task, 1000 + i, {}, {sc, 2}, 0.2);
          const auto rec = run_episode(spec, kind, {}, 5, i);
          ASSERT_EQ(rec.belief_mismatches, 0)
              << planner_name(kind) << " " << task_name(task) << " " << scenario_name(sc) << " " << i;
        }
      }
    }
  }
}

TEST(Episodes, HCoTSucceedsAndAlertsExactly) {
  for (auto task : kAllTasks) {
    for (auto sc : kAllScenarios) {
      for (double p : {0.0, 0.2}) {
        for (std::size_t i = 0; i < 15; ++i) {
          const auto spec = generate_episode(task, 50 + i, {}, {sc, 2}, p);
          const auto rec = run_episode(spec, PlannerKind::hcot, {}, 11, i);
          if (is_rmv(sc)) {
            ASSERT_TRUE(rec.rmv_label.has_value());
            ASSERT_EQ(rec.alerted(), *rec.rmv_label) << task_name(task) << " " << i;
            if (!rec.alerted()) {
              ASSERT_TRUE(rec.success());
            }
          } else {
            ASSERT_TRUE(rec.success()) << task_name(task) << " " << scenario_name(sc) << " p=" << p << " " << i
                                       << " " << terminal_name(rec.terminal) << " " << rec.failure_reason;
          }
        }
      }
    }
  }
}

TEST(Episodes, DistractorAdditionCostsFlatReplanOneStep) {
  for (auto task : kAllTasks) {
    for (std::size_t i = 0; i < 20; ++i) {
      const auto spec = generate_episode(task, 300 + i, {}, {Scenario::add_distractor, 2}, 0.0);
      const auto h = run_episode(spec, PlannerKind::hcot, {}, 3, i);
      const auto f = run_episode(spec, PlannerKind::flat_replan, {}, 3, i);
      ASSERT_TRUE(h.success());
      ASSERT_TRUE(f.success());
      ASSERT_EQ(h.steps_taken, h.nominal_length);
      ASSERT_EQ(f.steps_taken, f.nominal_length + 1);
    }
  }
}

TEST(Episodes, DisplacementOrdering) {
  for (auto task : kAllTasks) {
    int open = 0;
    int flat = 0;
    int hcot = 0;
    for (std::size_t i = 0; i < 40; ++i) {
      const auto spec = generate_episode(task, 700 + i, {}, {Scenario::dis, 2}, 0.0);
      open += run_episode(spec, PlannerKind::open_loop, {}, 9, i).success();
      flat += run_episode(spec, PlannerKind::flat_replan, {}, 9, i).success();
      hcot += run_episode(spec, PlannerKind::hcot, {}, 9, i).success();
    }
    EXPECT_LT(open, flat) << task_name(task);
    EXPECT_LE(flat, hcot) << task_name(task);
    EXPECT_EQ(hcot, 40) << task_name(task);
  }
}
