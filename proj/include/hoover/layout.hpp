#pragma once

#include <array>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hoover/events.hpp"
#include "hoover/geometry.hpp"

namespace hoover {

struct Key {
  std::string label;
  Rect rect;

  friend bool operator==(const Key&, const Key&) = default;
};

struct KeyRow {
  double y0 = 0.0;
  double y1 = 0.0;
  std::size_t first_key = 0;
  std::size_t key_count = 0;

  friend bool operator==(const KeyRow&, const KeyRow&) = default;
};

struct KeyboardLayout {
  Rect region;
  std::vector<Key> keys;
  std::vector<KeyRow> rows;

  const Key* find(std::string_view label) const {
    for (const Key& k : keys)
      if (k.label == label) return &k;
    return nullptr;
  }

  friend bool operator==(const KeyboardLayout&, const KeyboardLayout&) = default;
};

inline constexpr std::string_view kSpaceLabel = "space";

/// Bottom 40% of the screen split into four equal rows: the three letter
/// rows and a bottom row of comma, a six-unit space bar and period. Within a
/// row every unit is floor(width / units) pixels and the last key absorbs the
/// remainder.
inline KeyboardLayout make_layout(const ScreenSpec& screen) {
  if (screen.width_px < 360 || screen.height_px < 640)
    throw std::invalid_argument("screen too small for keyboard layout (need at least 360x640)");

  struct RowDef {
    std::vector<std::pair<std::string, int>> keys;  // label, width in units
  };
  auto letters = [](std::string_view s) {
    RowDef r;
    for (char c : s) r.keys.push_back({std::string(1, c), 1});
    return r;
  };
  const std::array<RowDef, 4> defs = {
      letters("qwertyuiop"),
      letters("asdfghjkl"),
      letters("zxcvbnm"),
      RowDef{{{",", 1}, {std::string(kSpaceLabel), 6}, {".", 1}}},
  };

  const int width = screen.width_px;
  const int region_h = screen.height_px * 2 / 5;
  const int top = screen.height_px - region_h;
  const int row_h = region_h / 4;

  KeyboardLayout layout;
  layout.region = {0.0, double(top), double(width), double(screen.height_px)};
  for (std::size_t r = 0; r < defs.size(); ++r) {
    const int y0 = top + int(r) * row_h;
    const int y1 = (r + 1 == defs.size()) ? screen.height_px : y0 + row_h;
    int units = 0;
    for (const auto& k : defs[r].keys) units += k.second;
    const int unit_w = width / units;

    KeyRow row{double(y0), double(y1), layout.keys.size(), defs[r].keys.size()};
    int x = 0;
    for (std::size_t i = 0; i < defs[r].keys.size(); ++i) {
      const auto& [label, span] = defs[r].keys[i];
      const int x1 = (i + 1 == defs[r].keys.size()) ? width : x + span * unit_w;
      layout.keys.push_back({label, Rect{double(x), double(y0), double(x1), double(y1)}});
      x = x1;
    }
    layout.rows.push_back(row);
  }
  return layout;
}

inline std::optional<std::string> key_at(const KeyboardLayout& layout, Point p) {
  for (const Key& k : layout.keys)
    if (k.rect.contains(p)) return k.label;
  return std::nullopt;
}

// Ties resolve to the earlier key in layout order.
inline const Key& nearest_key(const KeyboardLayout& layout, Point p) {
  const Key* best = &layout.keys.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (const Key& k : layout.keys) {
    const double d = distance(k.rect.center(), p);
    if (d < best_d) {
      best_d = d;
      best = &k;
    }
  }
  return *best;
}

// Key label for a typed character, or nullopt if the layout has no such key.
inline std::optional<std::string> label_for_char(char c) {
  if (c >= 'a' && c <= 'z') return std::string(1, c);
  if (c == ' ') return std::string(kSpaceLabel);
  if (c == '.' || c == ',') return std::string(1, c);
  return std::nullopt;
}

}  // namespace hoover
