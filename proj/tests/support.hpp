#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tlp/tlp.hpp"

namespace tlp::tsupport {

inline std::string data_path(const std::string& rel) { return std::string(TLP_TEST_DATA) + "/" + rel; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Every placement an item could legally take in `s`.
inline std::vector<Placement> item_placements(const WorkspaceState& s) {
  auto out = free_table_slots(s);
  for (const auto& [id, o] : s.objects()) {
    if (is_container(o.category) && !in_trash(o)) {
      for (const auto& p : free_slots(s, id)) out.push_back(p);
    }
  }
  if (s.find_first(Category::stand)) {
    for (int layer = 1; layer <= kStandLayers; ++layer) {
      for (const auto& p : free_slots(s, StandLayer{layer})) out.push_back(p);
    }
  }
  if (s.find_first(Category::trash_can)) out.push_back(InTrash{});
  return out;
}

/// Small random scene over a narrow palette so look-alikes are common.
inline WorkspaceState random_state(Rng& rng, int max_objects = 12) {
  WorkspaceState s(1 + static_cast<int>(rng.below(4)));
  std::uint32_t next = 0;
  auto add = [&](Category c, Color col, const std::vector<Placement>& options) {
    if (options.empty()) return;
    s = add_object(s, {ObjectId{next++}, c, col, options[rng.below(options.size())]});
  };
  if (rng.bernoulli(0.5)) add(Category::stand, Color::none, free_table_slots(s));
  if (rng.bernoulli(0.7)) add(Category::trash_can, Color::none, free_table_slots(s));
  const Color palette[] = {Color::red, Color::green, Color::blue};
  const int n = static_cast<int>(rng.below(static_cast<std::size_t>(max_objects) + 1));
  for (int i = 0; i < n; ++i) {
    const auto roll = rng.below(10);
    const Color col = palette[rng.below(3)];
    if (roll < 2) {
      add(Category::bowl, col, free_table_slots(s));
    } else if (roll == 2) {
      add(Category::box, Color::brown, free_table_slots(s));
    } else if (roll == 3) {
      const Category goods[] = {Category::apple, Category::cup, Category::book};
      add(goods[rng.below(3)], Color::none, item_placements(s));
    } else {
      add(Category::block, col, item_placements(s));
    }
  }
  return s;
}

}  // namespace tlp::tsupport
