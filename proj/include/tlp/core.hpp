#pragma once

// Shared vocabulary: object kinds, colors, table regions, errors, hashing and
// the deterministic random stream used by every stochastic component.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tlp {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class Errc {
  slot_occupied,
  unsupported_stand_slot,
  immovable_object,
  unknown_id,
  unknown_container,
  inconsistent_delta,
  invariant_violation,
  infeasible_config,
  no_plan,
  syntax_error,
  unknown_word,
  no_match,
  ambiguous,
  dest_full,
  not_distinguishable,
  no_free_table_slot,
  unsatisfiable_scenario,
  injection_conflict,
  belief_grounding_failure,
  ungroundable_plan,
  unparseable_reply,
  config_error,
  backend_error,
  serialization_error,
};

inline std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::slot_occupied: return "SlotOccupied";
    case Errc::unsupported_stand_slot: return "UnsupportedStandSlot";
    case Errc::immovable_object: return "ImmovableObject";
    case Errc::unknown_id: return "UnknownId";
    case Errc::unknown_container: return "UnknownContainer";
    case Errc::inconsistent_delta: return "InconsistentDelta";
    case Errc::invariant_violation: return "InvariantViolation";
    case Errc::infeasible_config: return "InfeasibleConfig";
    case Errc::no_plan: return "NoPlan";
    case Errc::syntax_error: return "SyntaxError";
    case Errc::unknown_word: return "UnknownWord";
    case Errc::no_match: return "NoMatch";
    case Errc::ambiguous: return "Ambiguous";
    case Errc::dest_full: return "DestFull";
    case Errc::not_distinguishable: return "NotDistinguishable";
    case Errc::no_free_table_slot: return "NoFreeTableSlot";
    case Errc::unsatisfiable_scenario: return "UnsatisfiableScenario";
    case Errc::injection_conflict: return "InjectionConflict";
    case Errc::belief_grounding_failure: return "BeliefGroundingFailure";
    case Errc::ungroundable_plan: return "UngroundablePlan";
    case Errc::unparseable_reply: return "UnparseableReply";
    case Errc::config_error: return "ConfigError";
    case Errc::backend_error: return "BackendError";
    case Errc::serialization_error: return "SerializationError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// ---------------------------------------------------------------------------
// Identifiers and enumerations
// ---------------------------------------------------------------------------

struct ObjectId {
  std::uint32_t value = 0;
  auto operator<=>(const ObjectId&) const = default;
};

enum class Category : std::uint8_t {
  block,
  bowl,
  box,
  stand,
  trash_can,
  // packing goods
  apple,
  banana,
  book,
  bottle,
  cup,
  dice,
  hammer,
  lemon,
  marker,
  mug,
  peach,
  plate,
  scissors,
  shoe,
  sponge,
  spoon,
  strawberry,
  teapot,
  toothbrush,
  wrench,
};

inline constexpr std::array<Category, 25> kAllCategories = {
    Category::block,  Category::bowl,     Category::box,        Category::stand,
    Category::trash_can, Category::apple, Category::banana,     Category::book,
    Category::bottle, Category::cup,      Category::dice,       Category::hammer,
    Category::lemon,  Category::marker,   Category::mug,        Category::peach,
    Category::plate,  Category::scissors, Category::shoe,       Category::sponge,
    Category::spoon,  Category::strawberry, Category::teapot,   Category::toothbrush,
    Category::wrench,
};

inline constexpr std::array<Category, 20> kGoodsCatalog = {
    Category::apple,  Category::banana,   Category::book,       Category::bottle,
    Category::cup,    Category::dice,     Category::hammer,     Category::lemon,
    Category::marker, Category::mug,      Category::peach,      Category::plate,
    Category::scissors, Category::shoe,   Category::sponge,     Category::spoon,
    Category::strawberry, Category::teapot, Category::toothbrush, Category::wrench,
};

inline std::string_view category_name(Category c) {
  switch (c) {
    case Category::block: return "block";
    case Category::bowl: return "bowl";
    case Category::box: return "box";
    case Category::stand: return "stand";
    case Category::trash_can: return "trash can";
    case Category::apple: return "apple";
    case Category::banana: return "banana";
    case Category::book: return "book";
    case Category::bottle: return "bottle";
    case Category::cup: return "cup";
    case Category::dice: return "dice";
    case Category::hammer: return "hammer";
    case Category::lemon: return "lemon";
    case Category::marker: return "marker";
    case Category::mug: return "mug";
    case Category::peach: return "peach";
    case Category::plate: return "plate";
    case Category::scissors: return "scissors";
    case Category::shoe: return "shoe";
    case Category::sponge: return "sponge";
    case Category::spoon: return "spoon";
    case Category::strawberry: return "strawberry";
    case Category::teapot: return "teapot";
    case Category::toothbrush: return "toothbrush";
    case Category::wrench: return "wrench";
  }
  return "?";
}

/// Identifier form used in serialized documents ("trash_can" rather than "trash can").
inline std::string category_key(Category c) {
  std::string s(category_name(c));
  for (auto& ch : s) {
    if (ch == ' ') ch = '_';
  }
  return s;
}

inline std::optional<Category> category_from_key(std::string_view key) {
  for (auto c : kAllCategories) {
    if (category_key(c) == key || category_name(c) == key) return c;
  }
  return std::nullopt;
}

/// Containers hold other objects; the stand supports them.
inline bool is_container(Category c) { return c == Category::bowl || c == Category::box; }
inline bool is_fixture(Category c) { return c == Category::stand || c == Category::trash_can; }
/// Items are what goal predicates move around: blocks and packing goods.
inline bool is_item(Category c) { return !is_container(c) && !is_fixture(c); }

enum class Color : std::uint8_t {
  none,
  red,
  green,
  blue,
  yellow,
  orange,
  purple,
  pink,
  white,
  gray,
  cyan,
  brown,
};

inline constexpr std::array<Color, 12> kAllColors = {
    Color::none,  Color::red,  Color::green, Color::blue,  Color::yellow, Color::orange,
    Color::purple, Color::pink, Color::white, Color::gray, Color::cyan,   Color::brown,
};

/// Colors available for blocks and bowls (brown is reserved for the packing box).
inline constexpr std::array<Color, 10> kBlockColors = {
    Color::red,    Color::green, Color::blue,  Color::yellow, Color::orange,
    Color::purple, Color::pink,  Color::white, Color::gray,   Color::cyan,
};

inline std::string_view color_name(Color c) {
  switch (c) {
    case Color::none: return "none";
    case Color::red: return "red";
    case Color::green: return "green";
    case Color::blue: return "blue";
    case Color::yellow: return "yellow";
    case Color::orange: return "orange";
    case Color::purple: return "purple";
    case Color::pink: return "pink";
    case Color::white: return "white";
    case Color::gray: return "gray";
    case Color::cyan: return "cyan";
    case Color::brown: return "brown";
  }
  return "?";
}

inline std::optional<Color> color_from_name(std::string_view name) {
  for (auto c : kAllColors) {
    if (color_name(c) == name) return c;
  }
  return std::nullopt;
}

// 3x3 partition of the table, row-major from the top left.
enum class Region : std::uint8_t {
  top_left,
  top_center,
  top_right,
  middle_left,
  middle_center,
  middle_right,
  bottom_left,
  bottom_center,
  bottom_right,
};

inline constexpr std::array<Region, 9> kAllRegions = {
    Region::top_left,    Region::top_center,    Region::top_right,
    Region::middle_left, Region::middle_center, Region::middle_right,
    Region::bottom_left, Region::bottom_center, Region::bottom_right,
};

/// Spoken form, e.g. "top left".
inline std::string_view region_name(Region r) {
  switch (r) {
    case Region::top_left: return "top left";
    case Region::top_center: return "top center";
    case Region::top_right: return "top right";
    case Region::middle_left: return "middle left";
    case Region::middle_center: return "middle center";
    case Region::middle_right: return "middle right";
    case Region::bottom_left: return "bottom left";
    case Region::bottom_center: return "bottom center";
    case Region::bottom_right: return "bottom right";
  }
  return "?";
}

inline std::string region_key(Region r) {
  std::string s(region_name(r));
  for (auto& ch : s) {
    if (ch == ' ') ch = '_';
  }
  return s;
}

inline std::optional<Region> region_from_key(std::string_view key) {
  for (auto r : kAllRegions) {
    if (region_key(r) == key || region_name(r) == key) return r;
  }
  return std::nullopt;
}

/// (category, color) pair: the observable identity of an object.
struct ObjectSpec {
  Category category = Category::block;
  Color color = Color::none;
  auto operator<=>(const ObjectSpec&) const = default;
};

inline std::string spec_phrase(const ObjectSpec& s) {
  if (s.color == Color::none) return std::string(category_name(s.category));
  return std::string(color_name(s.color)) + " " + std::string(category_name(s.category));
}

// ---------------------------------------------------------------------------
// Hashing and random streams
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the named per-episode stream:
/// splitmix64(master ^ splitmix64(index ^ fnv1a64(tag))).
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index,
                                 std::string_view tag) {
  return splitmix64(master ^ splitmix64(index ^ fnv1a64(tag)));
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

/// Deterministic generator. Only mt19937_64 output is consumed (its sequence is
/// fixed by the standard); distributions are implemented here so draws are
/// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// One draw; true with probability p.
  bool bernoulli(double p) { return uniform01() < p; }

  /// Uniform integer in [0, n). Rejection sampling, n > 0.
  std::size_t below(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % bound);
  }

  template <typename T>
  const T& pick(const std::vector<T>& items) {
    return items[below(items.size())];
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tlp
