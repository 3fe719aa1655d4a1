#pragma once

// Skill instructions with relational ("in the red bowl") and regional ("at the
// top left") descriptors: AST, canonical renderer, recursive-descent parser,
// grounding against a WorkspaceState, and minimal unique descriptors.
//
// Grammar (see docs/grammar.md):
//   instruction := "put" "the" object [relation] [at-region] ("into"|"onto") "the" dest ["."]
//   object      := [color] category
//   relation    := ("in"|"on") "the" [color] category
//   at-region   := "at" "the" region
//   dest        := "trash" "can" | "stand" "at" "the" stand-pos
//                | "table" "at" "the" region | [color] category [at-region]

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tlp/core.hpp"
#include "tlp/world.hpp"

namespace tlp {

enum class RelationKind { in, on };

/// Names a container or the stand: "red bowl", "brown box", "stand".
struct SupportPhrase {
  std::optional<Color> color;
  Category category = Category::bowl;
  bool operator==(const SupportPhrase&) const = default;
};

struct Relation {
  RelationKind kind = RelationKind::in;
  SupportPhrase support;
  bool operator==(const Relation&) const = default;
};

struct ObjectDescriptor {
  std::optional<Color> color;
  Category category = Category::block;
  std::optional<Relation> relation;
  std::optional<Region> region;
  bool operator==(const ObjectDescriptor&) const = default;
};

struct TrashDest {
  bool operator==(const TrashDest&) const = default;
};
/// A bowl or box, named without relation qualifiers.
struct ContainerDest {
  ObjectDescriptor container;
  bool operator==(const ContainerDest&) const = default;
};
struct StandDest {
  int layer = 1;
  int slot = 0;
  bool operator==(const StandDest&) const = default;
};
struct TableDest {
  Region region = Region::top_left;
  bool operator==(const TableDest&) const = default;
};

using Destination = std::variant<TrashDest, ContainerDest, StandDest, TableDest>;

enum class Verb { put, discard };

struct SkillInstruction {
  Verb verb = Verb::put;
  ObjectDescriptor pick;
  Destination dest = TrashDest{};
  bool operator==(const SkillInstruction&) const = default;
};

inline SkillInstruction make_instruction(ObjectDescriptor pick, Destination dest) {
  const Verb verb = std::holds_alternative<TrashDest>(dest) ? Verb::discard : Verb::put;
  return {verb, std::move(pick), std::move(dest)};
}

// ---------------------------------------------------------------------------
// Errors carrying extra context
// ---------------------------------------------------------------------------

class SyntaxError : public Error {
 public:
  SyntaxError(Errc code, std::size_t offset, const std::string& what)
      : Error(code, what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class GroundingError : public Error {
 public:
  GroundingError(Errc code, const std::string& what, std::vector<ObjectId> candidates = {})
      : Error(code, what), candidates_(std::move(candidates)) {}
  const std::vector<ObjectId>& candidates() const noexcept { return candidates_; }

 private:
  std::vector<ObjectId> candidates_;
};

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Spoken stand position: layer 1 "bottom left|center|right", layer 2
/// "middle left|right", layer 3 "top".
inline std::string stand_position_name(int layer, int slot) {
  static const char* kBase[] = {"bottom left", "bottom center", "bottom right"};
  static const char* kMiddle[] = {"middle left", "middle right"};
  if (!valid_stand_position(layer, slot)) return "?";
  if (layer == 1) return kBase[slot];
  if (layer == 2) return kMiddle[slot];
  return "top";
}

inline std::string render_support(const SupportPhrase& s) {
  std::string out;
  if (s.color) out += std::string(color_name(*s.color)) + " ";
  out += category_name(s.category);
  return out;
}

inline std::string render_descriptor(const ObjectDescriptor& d) {
  std::string out;
  if (d.color) out += std::string(color_name(*d.color)) + " ";
  out += category_name(d.category);
  if (d.relation) {
    out += d.relation->kind == RelationKind::in ? " in the " : " on the ";
    out += render_support(d.relation->support);
  }
  if (d.region) out += " at the " + std::string(region_name(*d.region));
  return out;
}

inline std::string render_destination(const Destination& dest) {
  return std::visit(
      [](const auto& d) -> std::string {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, TrashDest>) {
          return "into the trash can";
        } else if constexpr (std::is_same_v<D, ContainerDest>) {
          return "into the " + render_descriptor(d.container);
        } else if constexpr (std::is_same_v<D, StandDest>) {
          return "onto the stand at the " + stand_position_name(d.layer, d.slot);
        } else {
          return "onto the table at the " + std::string(region_name(d.region));
        }
      },
      dest);
}

/// Canonical lowercase sentence, no trailing period.
inline std::string render_instruction(const SkillInstruction& i) {
  return "put the " + render_descriptor(i.pick) + " " + render_destination(i.dest);
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

struct Token {
  std::string text;
  std::size_t offset = 0;
};

inline bool known_word(std::string_view w) {
  static constexpr std::string_view kWords[] = {
      "put", "the", "in", "on", "at", "into", "onto", "top", "middle", "bottom",
      "left", "center", "right", "table", "stand", "trash", "can"};
  for (auto k : kWords) {
    if (k == w) return true;
  }
  if (color_from_name(w) && w != "none") return true;
  for (auto c : kAllCategories) {
    if (category_name(c) == w) return true;
  }
  return false;
}

class InstructionParser {
 public:
  explicit InstructionParser(std::string_view text) : text_(text) { tokenize(); }

  SkillInstruction parse() {
    expect("put");
    expect("the");
    ObjectDescriptor pick = parse_object();
    const Token verb_tok = peek();
    if (verb_tok.text != "into" && verb_tok.text != "onto") fail("expected 'into' or 'onto'");
    ++pos_;
    expect("the");
    Destination dest = parse_destination();
    if (!at_end()) fail("unexpected trailing words");
    const bool onto = std::holds_alternative<StandDest>(dest) || std::holds_alternative<TableDest>(dest);
    if (onto != (verb_tok.text == "onto")) {
      throw SyntaxError(Errc::syntax_error, verb_tok.offset,
                        onto ? "the stand and table take 'onto'" : "containers and the trash can take 'into'");
    }
    return make_instruction(std::move(pick), std::move(dest));
  }

 private:
  void tokenize() {
    std::size_t i = 0;
    while (i < text_.size()) {
      const unsigned char c = static_cast<unsigned char>(text_[i]);
      if (std::isspace(c)) {
        ++i;
        continue;
      }
      if (c == '.') {
        // A single terminating period is allowed.
        std::size_t j = i + 1;
        while (j < text_.size() && std::isspace(static_cast<unsigned char>(text_[j]))) ++j;
        if (j != text_.size()) throw SyntaxError(Errc::syntax_error, i, "period before end of sentence");
        break;
      }
      if (!std::isalpha(c)) throw SyntaxError(Errc::syntax_error, i, "unexpected character");
      const std::size_t start = i;
      std::string word;
      while (i < text_.size() && std::isalpha(static_cast<unsigned char>(text_[i]))) {
        word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text_[i]))));
        ++i;
      }
      if (!known_word(word)) throw SyntaxError(Errc::unknown_word, start, "unknown word '" + word + "'");
      tokens_.push_back({std::move(word), start});
    }
    if (tokens_.empty()) throw SyntaxError(Errc::syntax_error, 0, "empty instruction");
  }

  bool at_end() const { return pos_ >= tokens_.size(); }

  const Token& peek() const {
    if (at_end()) {
      end_token_.offset = text_.size();
      return end_token_;
    }
    return tokens_[pos_];
  }

  bool accept(std::string_view w) {
    if (!at_end() && tokens_[pos_].text == w) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError(Errc::syntax_error, peek().offset, msg);
  }

  void expect(std::string_view w) {
    if (!accept(w)) fail("expected '" + std::string(w) + "'");
  }

  std::optional<Color> parse_color() {
    if (at_end()) return std::nullopt;
    auto c = color_from_name(tokens_[pos_].text);
    if (!c || *c == Color::none) return std::nullopt;
    ++pos_;
    return c;
  }

  Category parse_category() {
    if (accept("trash")) {
      expect("can");
      return Category::trash_can;
    }
    if (!at_end()) {
      for (auto c : kAllCategories) {
        if (c != Category::trash_can && category_name(c) == tokens_[pos_].text) {
          ++pos_;
          return c;
        }
      }
    }
    fail("expected an object category");
  }

  Region parse_region() {
    int row = -1;
    if (accept("top")) row = 0;
    else if (accept("middle")) row = 1;
    else if (accept("bottom")) row = 2;
    else fail("expected 'top', 'middle' or 'bottom'");
    int col = -1;
    if (accept("left")) col = 0;
    else if (accept("center")) col = 1;
    else if (accept("right")) col = 2;
    else fail("expected 'left', 'center' or 'right'");
    return kAllRegions[static_cast<std::size_t>(row * 3 + col)];
  }

  std::pair<int, int> parse_stand_position() {
    if (accept("top")) return {3, 0};
    if (accept("middle")) {
      if (accept("left")) return {2, 0};
      if (accept("right")) return {2, 1};
      fail("expected 'left' or 'right'");
    }
    if (accept("bottom")) {
      if (accept("left")) return {1, 0};
      if (accept("center")) return {1, 1};
      if (accept("right")) return {1, 2};
      fail("expected 'left', 'center' or 'right'");
    }
    fail("expected a stand position");
  }

  ObjectDescriptor parse_object() {
    ObjectDescriptor d;
    d.color = parse_color();
    d.category = parse_category();
    if (!at_end() && (tokens_[pos_].text == "in" || tokens_[pos_].text == "on")) {
      Relation rel;
      rel.kind = tokens_[pos_].text == "in" ? RelationKind::in : RelationKind::on;
      ++pos_;
      expect("the");
      rel.support.color = parse_color();
      rel.support.category = parse_category();
      d.relation = rel;
    }
    if (accept("at")) {
      expect("the");
      d.region = parse_region();
    }
    return d;
  }

  Destination parse_destination() {
    if (!at_end() && tokens_[pos_].text == "trash") {
      ++pos_;
      expect("can");
      return TrashDest{};
    }
    if (accept("stand")) {
      expect("at");
      expect("the");
      auto [layer, slot] = parse_stand_position();
      return StandDest{layer, slot};
    }
    if (accept("table")) {
      expect("at");
      expect("the");
      return TableDest{parse_region()};
    }
    ObjectDescriptor c;
    c.color = parse_color();
    c.category = parse_category();
    if (accept("at")) {
      expect("the");
      c.region = parse_region();
    }
    return ContainerDest{c};
  }

  std::string_view text_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  mutable Token end_token_;
};

}  // namespace detail

/// Throws SyntaxError (code syntax_error or unknown_word) with a character offset.
inline SkillInstruction parse_instruction(std::string_view text) {
  return detail::InstructionParser(text).parse();
}

// ---------------------------------------------------------------------------
// Grounding
// ---------------------------------------------------------------------------

inline bool support_matches(const SupportPhrase& s, const ObjectInstance& o) {
  return o.category == s.category && (!s.color || *s.color == o.color);
}

inline bool descriptor_matches(const ObjectDescriptor& d, const WorkspaceState& s,
                               const ObjectInstance& o) {
  if (in_trash(o)) return false;
  if (o.category != d.category) return false;
  if (d.color && *d.color != o.color) return false;
  if (d.relation) {
    if (d.relation->kind == RelationKind::in) {
      const auto* in = std::get_if<InContainer>(&o.placement);
      if (!in) return false;
      const auto* c = s.find(in->container);
      if (!c || !support_matches(d.relation->support, *c)) return false;
    } else {
      if (!std::holds_alternative<OnStand>(o.placement)) return false;
      const auto* stand = s.find_first(Category::stand);
      if (!stand || !support_matches(d.relation->support, *stand)) return false;
    }
  }
  if (d.region && effective_region(s, o) != d.region) return false;
  return true;
}

/// Every object the descriptor denotes, in id order.
inline std::vector<ObjectId> denotation(const ObjectDescriptor& d, const WorkspaceState& s) {
  std::vector<ObjectId> out;
  for (const auto& [id, o] : s.objects()) {
    if (descriptor_matches(d, s, o)) out.push_back(id);
  }
  return out;
}

inline ObjectId ground(const ObjectDescriptor& d, const WorkspaceState& s) {
  auto ids = denotation(d, s);
  if (ids.empty()) throw GroundingError(Errc::no_match, "nothing matches '" + render_descriptor(d) + "'");
  if (ids.size() > 1) {
    throw GroundingError(Errc::ambiguous,
                         std::to_string(ids.size()) + " objects match '" + render_descriptor(d) + "'", ids);
  }
  return ids.front();
}

/// Resolves a destination to a concrete placement for `moving` (whose own
/// current position counts as free).
inline Placement ground_destination(const Destination& dest, const WorkspaceState& s,
                                    std::optional<ObjectId> moving = std::nullopt) {
  auto held_only_by_mover = [&](const std::vector<ObjectId>& ids) {
    return ids.empty() || (ids.size() == 1 && moving && ids.front() == *moving);
  };
  return std::visit(
      [&](const auto& d) -> Placement {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, TrashDest>) {
          if (!s.find_first(Category::trash_can)) throw GroundingError(Errc::no_match, "no trash can");
          return InTrash{};
        } else if constexpr (std::is_same_v<D, ContainerDest>) {
          const ObjectId cid = ground(d.container, s);
          const auto& c = s.at(cid);
          if (!is_container(c.category)) {
            throw GroundingError(Errc::no_match, "'" + render_descriptor(d.container) + "' is not a container");
          }
          if (c.category == Category::bowl && !held_only_by_mover(contents(s, cid))) {
            throw GroundingError(Errc::dest_full, "the " + render_descriptor(d.container) + " is occupied");
          }
          return InContainer{cid};
        } else if constexpr (std::is_same_v<D, StandDest>) {
          if (!s.find_first(Category::stand)) throw GroundingError(Errc::no_match, "no stand");
          if (!valid_stand_position(d.layer, d.slot)) throw GroundingError(Errc::no_match, "no such stand slot");
          const auto* occ = occupant(s, OnStand{d.layer, d.slot});
          if (occ && (!moving || occ->id != *moving)) {
            throw GroundingError(Errc::dest_full, "stand slot " + stand_position_name(d.layer, d.slot) + " is occupied");
          }
          if (!stand_supported(s, d.layer, d.slot)) {
            throw GroundingError(Errc::dest_full, "stand slot " + stand_position_name(d.layer, d.slot) + " is unsupported");
          }
          return OnStand{d.layer, d.slot};
        } else {
          for (int slot = 0; slot < s.slot_capacity(); ++slot) {
            const auto* occ = occupant(s, OnTable{d.region, slot});
            if (!occ || (moving && occ->id == *moving)) return OnTable{d.region, slot};
          }
          throw GroundingError(Errc::dest_full, "the " + std::string(region_name(d.region)) + " is full");
        }
      },
      dest);
}

struct GroundedInstruction {
  ObjectId object;
  Placement target;
};

inline GroundedInstruction ground_instruction(const SkillInstruction& i, const WorkspaceState& s) {
  const ObjectId id = ground(i.pick, s);
  return {id, ground_destination(i.dest, s, id)};
}

// ---------------------------------------------------------------------------
// Descriptor generation
// ---------------------------------------------------------------------------

inline std::optional<Relation> relation_of(const WorkspaceState& s, const ObjectInstance& o) {
  if (const auto* in = std::get_if<InContainer>(&o.placement)) {
    const auto& c = s.at(in->container);
    Relation rel{RelationKind::in, SupportPhrase{std::nullopt, c.category}};
    if (c.color != Color::none) rel.support.color.emplace(c.color);
    return rel;
  }
  if (std::holds_alternative<OnStand>(o.placement)) {
    return Relation{RelationKind::on, SupportPhrase{std::nullopt, Category::stand}};
  }
  return std::nullopt;
}

/// Shortest descriptor denoting exactly `id`: color and category first, then a
/// relation, then a region, each added only if it narrows the denotation.
inline ObjectDescriptor minimal_unique_descriptor(ObjectId id, const WorkspaceState& s) {
  const auto& o = s.at(id);
  if (is_fixture(o.category) || in_trash(o)) {
    throw GroundingError(Errc::immovable_object, "no descriptor for immovable object " + std::to_string(id.value));
  }
  ObjectDescriptor d;
  d.category = o.category;
  if (o.color != Color::none) d.color = o.color;
  auto count = denotation(d, s).size();
  if (count == 1) return d;
  if (auto rel = relation_of(s, o)) {
    ObjectDescriptor narrower = d;
    narrower.relation = rel;
    const auto n = denotation(narrower, s).size();
    if (n < count) {
      d = narrower;
      count = n;
    }
    if (count == 1) return d;
  }
  if (auto region = effective_region(s, o)) {
    ObjectDescriptor narrower = d;
    narrower.region = region;
    const auto n = denotation(narrower, s).size();
    if (n < count) {
      d = narrower;
      count = n;
    }
  }
  if (count != 1) {
    throw GroundingError(Errc::not_distinguishable,
                         "object " + std::to_string(id.value) + " cannot be told apart from an identical neighbour",
                         denotation(d, s));
  }
  return d;
}

/// True when every object sharing `spec` has a unique descriptor.
inline bool all_distinguishable(const WorkspaceState& s, const ObjectSpec& spec) {
  for (const auto& [id, o] : s.objects()) {
    if (o.spec() != spec || in_trash(o)) continue;
    try {
      minimal_unique_descriptor(id, s);
    } catch (const GroundingError&) {
      return false;
    }
  }
  return true;
}

/// Where a planner wants an object to go, before it is phrased.
struct TrashTarget {
  bool operator==(const TrashTarget&) const = default;
};
struct ContainerTarget {
  ObjectId container;
  bool operator==(const ContainerTarget&) const = default;
};
struct StandTarget {
  int layer = 1;
  int slot = 0;
  bool operator==(const StandTarget&) const = default;
};
struct TableTarget {
  Region region = Region::top_left;
  bool operator==(const TableTarget&) const = default;
};
using Target = std::variant<TrashTarget, ContainerTarget, StandTarget, TableTarget>;

/// Names a bowl or box by color, category and (if needed) region.
inline ObjectDescriptor container_descriptor(ObjectId id, const WorkspaceState& s) {
  const auto& c = s.at(id);
  ObjectDescriptor d;
  d.category = c.category;
  if (c.color != Color::none) d.color = c.color;
  if (denotation(d, s).size() == 1) return d;
  d.region = effective_region(s, c);
  if (denotation(d, s).size() != 1) {
    throw GroundingError(Errc::not_distinguishable, "container " + std::to_string(id.value) + " is not distinguishable");
  }
  return d;
}

inline Destination phrase_target(const Target& t, const WorkspaceState& s) {
  return std::visit(
      [&](const auto& v) -> Destination {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TrashTarget>) {
          return TrashDest{};
        } else if constexpr (std::is_same_v<T, ContainerTarget>) {
          return ContainerDest{container_descriptor(v.container, s)};
        } else if constexpr (std::is_same_v<T, StandTarget>) {
          return StandDest{v.layer, v.slot};
        } else {
          return TableDest{v.region};
        }
      },
      t);
}

/// Instruction moving `id` to `target`, phrased with minimal descriptors.
inline SkillInstruction phrase_instruction(ObjectId id, const Target& target, const WorkspaceState& s) {
  return make_instruction(minimal_unique_descriptor(id, s), phrase_target(target, s));
}

}  // namespace tlp
