#pragma once

// Low-level skill execution: one pick-and-place attempt per call. With
// probability p the grasped object drops onto a free table slot instead.

#include <optional>

#include "tlp/core.hpp"
#include "tlp/instr.hpp"
#include "tlp/world.hpp"

namespace tlp {

enum class ExecStatus { succeeded, failed_dropped };

struct ExecOutcome {
  ExecStatus status = ExecStatus::succeeded;
  ObjectId object;
  std::optional<Placement> dropped_at;
  std::uint64_t pre_hash = 0;
  std::uint64_t post_hash = 0;
  bool operator==(const ExecOutcome&) const = default;
};

struct ExecutorConfig {
  double failure_prob = 0.2;
};

struct ExecResult {
  WorkspaceState state;
  ExecOutcome outcome;
};

/// Free table slots where `id` can land without becoming indistinguishable
/// from an identical object; all free slots if no such slot exists.
inline std::vector<Placement> drop_candidates(const WorkspaceState& s, ObjectId id) {
  const auto& obj = s.at(id);
  StateEditor lift(s);
  lift.erase(id);
  const auto lifted = std::move(lift).take();
  auto free = free_table_slots(lifted);
  std::vector<Placement> clean;
  for (const auto& p : free) {
    StateEditor ed(lifted);
    ed.put({id, obj.category, obj.color, p});
    if (all_distinguishable(std::move(ed).take(), obj.spec())) clean.push_back(p);
  }
  return clean.empty() ? free : clean;
}

/// One attempt. Draws exactly one uniform for the failure decision and, only on
/// failure, one more for the drop slot.
inline ExecResult execute(const WorkspaceState& state, const SkillInstruction& instr,
                          const ExecutorConfig& cfg, Rng& rng) {
  if (!(cfg.failure_prob >= 0.0 && cfg.failure_prob <= 1.0)) {
    throw Error(Errc::config_error, "failure probability outside [0, 1]");
  }
  const auto grounded = ground_instruction(instr, state);
  ExecOutcome outcome;
  outcome.object = grounded.object;
  outcome.pre_hash = state_hash(state);

  const bool dropped = rng.bernoulli(cfg.failure_prob);
  WorkspaceState post = state;
  if (!dropped) {
    post = place_object(state, grounded.object, grounded.target);
    outcome.status = ExecStatus::succeeded;
  } else {
    const auto candidates = drop_candidates(state, grounded.object);
    if (candidates.empty()) throw Error(Errc::no_free_table_slot, "table is full");
    const Placement at = candidates[rng.below(candidates.size())];
    post = place_object(state, grounded.object, at);
    outcome.status = ExecStatus::failed_dropped;
    outcome.dropped_at = at;
  }
  outcome.post_hash = state_hash(post);
  return {std::move(post), outcome};
}

}  // namespace tlp
