#pragma once

// Monitoring: per step, the answer to "did the action succeed?" (r1) and
// "did any perturbation occur?" (r2), computed from ground-truth state deltas.
// Objects are reported by what they look like and where they are, never by id.

#include <cctype>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "tlp/core.hpp"
#include "tlp/executor.hpp"
#include "tlp/instr.hpp"
#include "tlp/world.hpp"

namespace tlp {

// ---------------------------------------------------------------------------
// Observable locations
// ---------------------------------------------------------------------------

struct TableLocation {
  Region region = Region::top_left;
  bool operator==(const TableLocation&) const = default;
};
struct ContainerLocation {
  ObjectDescriptor container;
  bool operator==(const ContainerLocation&) const = default;
};
struct StandLocation {
  int layer = 1;
  int slot = 0;
  bool operator==(const StandLocation&) const = default;
};
struct TrashLocation {
  bool operator==(const TrashLocation&) const = default;
};

using Location = std::variant<TableLocation, ContainerLocation, StandLocation, TrashLocation>;

inline Location location_of(const WorkspaceState& s, const ObjectInstance& o) {
  return std::visit(
      [&](const auto& p) -> Location {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, OnTable>) {
          return TableLocation{p.region};
        } else if constexpr (std::is_same_v<P, InContainer>) {
          return ContainerLocation{container_descriptor(p.container, s)};
        } else if constexpr (std::is_same_v<P, OnStand>) {
          return StandLocation{p.layer, p.slot};
        } else {
          return TrashLocation{};
        }
      },
      o.placement);
}

/// Noun phrase: "the top left", "the red bowl", "the stand at the top".
inline std::string location_noun(const Location& l) {
  return std::visit(
      [](const auto& v) -> std::string {
        using L = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<L, TableLocation>) {
          return "the " + std::string(region_name(v.region));
        } else if constexpr (std::is_same_v<L, ContainerLocation>) {
          return "the " + render_descriptor(v.container);
        } else if constexpr (std::is_same_v<L, StandLocation>) {
          return "the stand at the " + stand_position_name(v.layer, v.slot);
        } else {
          return "the trash can";
        }
      },
      l);
}

/// With preposition: "at the top left", "in the red bowl", "on the stand at ...".
inline std::string location_phrase(const Location& l) {
  if (std::holds_alternative<TableLocation>(l)) return "at " + location_noun(l);
  if (std::holds_alternative<StandLocation>(l)) return "on " + location_noun(l);
  return "in " + location_noun(l);
}

/// Id- and slot-free description of a state: one line per object with its
/// look and observable location, sorted. Two states a language-only observer
/// cannot tell apart have equal forms.
inline std::string observable_form(const WorkspaceState& s) {
  std::vector<std::string> lines;
  for (const auto& [id, o] : s.objects()) {
    lines.push_back(spec_phrase(o.spec()) + " " + location_phrase(location_of(s, o)));
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

inline std::uint64_t observable_hash(const WorkspaceState& s) { return fnv1a64(observable_form(s)); }

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct DropReport {
  ObjectSpec object;
  Region region = Region::top_left;
  bool operator==(const DropReport&) const = default;
};

/// r1. `drop` is present exactly when the action failed.
struct ExecAnswer {
  bool succeeded = true;
  std::optional<DropReport> drop;
  bool operator==(const ExecAnswer&) const = default;
};

struct NoPerturbation {
  bool operator==(const NoPerturbation&) const = default;
};
struct AddedEntry {
  ObjectSpec object;
  Location at;
  bool operator==(const AddedEntry&) const = default;
};
struct RemovedEntry {
  ObjectSpec object;
  Location from;
  bool operator==(const RemovedEntry&) const = default;
};
struct MovedEntry {
  ObjectSpec object;
  Location from;
  Location to;
  bool operator==(const MovedEntry&) const = default;
};

using PerturbAnswer = std::variant<NoPerturbation, AddedEntry, RemovedEntry, MovedEntry>;

struct MonitorReport {
  int step = 0;
  ExecAnswer r1;
  std::vector<PerturbAnswer> r2{NoPerturbation{}};

  bool operator==(const MonitorReport&) const = default;

  /// Entries other than "no perturbation".
  std::vector<PerturbAnswer> perturbations() const {
    std::vector<PerturbAnswer> out;
    for (const auto& e : r2) {
      if (!std::holds_alternative<NoPerturbation>(e)) out.push_back(e);
    }
    return out;
  }
};

/// r1 mirrors the outcome; r2 lists every added, removed and moved object of
/// each injected event delta, in injection order ([none] if nothing happened).
/// `after_exec` is the state the first delta applies to.
inline MonitorReport observe(int step, const ExecOutcome& outcome, const WorkspaceState& after_exec,
                             std::span<const StateDelta> event_deltas) {
  MonitorReport r;
  r.step = step;
  if (outcome.status == ExecStatus::failed_dropped) {
    const auto& o = after_exec.at(outcome.object);
    r.r1.succeeded = false;
    r.r1.drop = DropReport{o.spec(), std::get<OnTable>(*outcome.dropped_at).region};
  }
  r.r2.clear();
  WorkspaceState cur = after_exec;
  for (const auto& d : event_deltas) {
    const WorkspaceState next = apply_delta(cur, d);
    for (const auto& o : d.removed) r.r2.push_back(RemovedEntry{o.spec(), location_of(cur, o)});
    for (const auto& m : d.moved) {
      const auto& before = cur.at(m.id);
      r.r2.push_back(MovedEntry{before.spec(), location_of(cur, before), location_of(next, next.at(m.id))});
    }
    for (const auto& o : d.added) r.r2.push_back(AddedEntry{o.spec(), location_of(next, next.at(o.id))});
    cur = next;
  }
  if (r.r2.empty()) r.r2.push_back(NoPerturbation{});
  return r;
}

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

struct NoiseModel {
  double flip_exec = 0.0;     // eps1: r1 inverted
  double miss_perturb = 0.0;  // eps2: an r2 entry dropped
  double hallucinate = 0.0;   // eps3: a spurious Added entry appended

  bool is_oracle() const { return flip_exec == 0.0 && miss_perturb == 0.0 && hallucinate == 0.0; }
  bool operator==(const NoiseModel&) const = default;
};

/// Draw order per report: one uniform for eps1, one per real r2 entry for
/// eps2, one for eps3; extra draws only to fill in corrupted content.
/// `acted` names the object the step tried to move (used when a success is
/// flipped into a failure).
inline MonitorReport apply_noise(const MonitorReport& report, const NoiseModel& noise, Rng& rng,
                                 const ObjectSpec& acted = {}) {
  for (double e : {noise.flip_exec, noise.miss_perturb, noise.hallucinate}) {
    if (!(e >= 0.0 && e <= 1.0)) throw Error(Errc::config_error, "noise rate outside [0, 1]");
  }
  MonitorReport out = report;
  if (rng.bernoulli(noise.flip_exec)) {
    if (out.r1.succeeded) {
      const auto region = kAllRegions[rng.below(kAllRegions.size())];
      out.r1 = {false, DropReport{acted, region}};
    } else {
      out.r1 = {true, std::nullopt};
    }
  }
  std::vector<PerturbAnswer> kept;
  for (const auto& e : report.r2) {
    if (std::holds_alternative<NoPerturbation>(e)) continue;
    if (!rng.bernoulli(noise.miss_perturb)) kept.push_back(e);
  }
  if (rng.bernoulli(noise.hallucinate)) {
    const Color c = kBlockColors[rng.below(kBlockColors.size())];
    const Region r = kAllRegions[rng.below(kAllRegions.size())];
    kept.push_back(AddedEntry{{Category::block, c}, TableLocation{r}});
  }
  if (kept.empty()) kept.push_back(NoPerturbation{});
  out.r2 = std::move(kept);
  return out;
}

// ---------------------------------------------------------------------------
// Rendering and parsing
// ---------------------------------------------------------------------------

inline std::string render_entry(const PerturbAnswer& e) {
  return std::visit(
      [](const auto& v) -> std::string {
        using E = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<E, NoPerturbation>) {
          return "No perturbation occurred.";
        } else if constexpr (std::is_same_v<E, AddedEntry>) {
          return "A never-seen " + spec_phrase(v.object) + " appeared " + location_phrase(v.at) + ".";
        } else if constexpr (std::is_same_v<E, RemovedEntry>) {
          return "The " + spec_phrase(v.object) + " disappeared from " + location_noun(v.from) + ".";
        } else {
          return "The " + spec_phrase(v.object) + " moved from " + location_noun(v.from) + " to " +
                 location_noun(v.to) + ".";
        }
      },
      e);
}

inline std::string render_report(const MonitorReport& r) {
  std::string out = r.r1.succeeded ? "The action succeeded." : "The action failed.";
  if (!r.r1.succeeded && r.r1.drop) {
    out += " The " + spec_phrase(r.r1.drop->object) + " dropped at the " +
           std::string(region_name(r.r1.drop->region)) + ".";
  }
  for (const auto& e : r.r2) out += " " + render_entry(e);
  return out;
}

namespace detail {

class ReportParser {
 public:
  explicit ReportParser(std::string_view text) {
    std::string word;
    for (char ch : text) {
      const auto c = static_cast<unsigned char>(ch);
      if (std::isspace(c) || ch == '.') {
        if (!word.empty()) words_.push_back(std::move(word));
        word.clear();
        if (ch == '.') words_.push_back(".");
      } else {
        word.push_back(static_cast<char>(std::tolower(c)));
      }
    }
    if (!word.empty()) words_.push_back(std::move(word));
  }

  MonitorReport parse(int step) {
    MonitorReport r;
    r.step = step;
    r.r2.clear();
    expect("the");
    expect("action");
    if (accept("succeeded")) {
      r.r1.succeeded = true;
    } else {
      expect("failed");
      r.r1.succeeded = false;
    }
    expect(".");
    if (!r.r1.succeeded && peek() == "the" && lookahead_dropped()) {
      expect("the");
      DropReport d;
      d.object = parse_spec();
      expect("dropped");
      expect("at");
      expect("the");
      d.region = parse_region();
      expect(".");
      r.r1.drop = d;
    }
    while (!at_end()) r.r2.push_back(parse_entry());
    if (r.r2.empty()) fail("missing perturbation answer");
    return r;
  }

 private:
  bool at_end() const { return pos_ >= words_.size(); }
  std::string peek(std::size_t ahead = 0) const {
    return pos_ + ahead < words_.size() ? words_[pos_ + ahead] : std::string();
  }
  bool accept(std::string_view w) {
    if (peek() == w) {
      ++pos_;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::syntax_error, "report: " + msg + " at word " + std::to_string(pos_));
  }
  void expect(std::string_view w) {
    if (!accept(w)) fail("expected '" + std::string(w) + "'");
  }

  bool lookahead_dropped() const {
    for (std::size_t i = pos_; i < words_.size() && words_[i] != "."; ++i) {
      if (words_[i] == "dropped") return true;
    }
    return false;
  }

  std::optional<Color> parse_color() {
    auto c = color_from_name(peek());
    if (!c || *c == Color::none) return std::nullopt;
    ++pos_;
    return c;
  }

  Category parse_category() {
    if (accept("trash")) {
      expect("can");
      return Category::trash_can;
    }
    for (auto c : kAllCategories) {
      if (c != Category::trash_can && category_name(c) == peek()) {
        ++pos_;
        return c;
      }
    }
    fail("expected a category");
  }

  ObjectSpec parse_spec() {
    const auto c = parse_color();
    return {parse_category(), c.value_or(Color::none)};
  }

  Region parse_region() {
    const auto row = peek();
    const auto col = peek(1);
    if (auto r = region_from_key(row + "_" + col)) {
      pos_ += 2;
      return *r;
    }
    fail("expected a region");
  }

  StandLocation parse_stand_tail() {
    expect("at");
    expect("the");
    if (accept("top")) return {3, 0};
    const auto row = peek();
    const auto col = peek(1);
    for (int layer = 1; layer <= 2; ++layer) {
      for (int slot = 0; slot < stand_slots(layer); ++slot) {
        if (stand_position_name(layer, slot) == row + " " + col) {
          pos_ += 2;
          return {layer, slot};
        }
      }
    }
    fail("expected a stand position");
  }

  bool region_ahead() const {
    return region_from_key(peek() + "_" + peek(1)).has_value();
  }

  /// After "the": region | "stand at the ..." | "trash can" | container.
  Location parse_location_noun() {
    expect("the");
    if (peek() == "trash" && peek(1) == "can") {
      pos_ += 2;
      return TrashLocation{};
    }
    if (accept("stand")) return parse_stand_tail();
    if (region_ahead()) return TableLocation{parse_region()};
    ObjectDescriptor d;
    d.color = parse_color();
    d.category = parse_category();
    if (peek() == "at" && peek(1) == "the" && region_from_key(peek(2) + "_" + peek(3))) {
      pos_ += 2;
      d.region = parse_region();
    }
    return ContainerLocation{d};
  }

  Location parse_location_phrase() {
    if (accept("at")) {
      expect("the");
      return TableLocation{parse_region()};
    }
    if (accept("on")) {
      expect("the");
      expect("stand");
      return parse_stand_tail();
    }
    expect("in");
    return parse_location_noun();
  }

  PerturbAnswer parse_entry() {
    if (accept("no")) {
      expect("perturbation");
      expect("occurred");
      expect(".");
      return NoPerturbation{};
    }
    if (accept("a")) {
      expect("never-seen");
      AddedEntry e;
      e.object = parse_spec();
      expect("appeared");
      e.at = parse_location_phrase();
      expect(".");
      return e;
    }
    expect("the");
    const ObjectSpec spec = parse_spec();
    if (accept("disappeared")) {
      expect("from");
      RemovedEntry e{spec, parse_location_noun()};
      expect(".");
      return e;
    }
    expect("moved");
    expect("from");
    MovedEntry e;
    e.object = spec;
    e.from = parse_location_noun();
    expect("to");
    e.to = parse_location_noun();
    expect(".");
    return e;
  }

  std::vector<std::string> words_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Inverse of render_report; throws Error(syntax_error) on malformed text.
inline MonitorReport parse_report(std::string_view text, int step = 0) {
  return detail::ReportParser(text).parse(step);
}

}  // namespace tlp
