#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hoover/geometry.hpp"

namespace hoover {

using Micros = std::int64_t;

struct ScreenSpec {
  int width_px = 720;
  int height_px = 1280;
  double hover_range_mm = 20.0;

  bool valid() const { return width_px > 0 && height_px > 0 && hover_range_mm > 0.0; }
  Rect bounds() const { return {0.0, 0.0, double(width_px), double(height_px)}; }
  bool contains(Point p) const { return bounds().contains(p); }

  friend bool operator==(const ScreenSpec&, const ScreenSpec&) = default;
};

enum class InputMethod : std::uint8_t { Stylus = 0, Finger = 1 };

inline std::string_view to_string(InputMethod m) {
  return m == InputMethod::Stylus ? "stylus" : "finger";
}

inline InputMethod parse_method(std::string_view s) {
  if (s == "stylus") return InputMethod::Stylus;
  if (s == "finger") return InputMethod::Finger;
  throw std::invalid_argument("unknown input method '" + std::string(s) + "'");
}

enum class EventKind : std::uint8_t { HoverEnter, HoverMove, HoverExit, TouchDown, TouchUp };

inline bool is_hover(EventKind k) {
  return k == EventKind::HoverEnter || k == EventKind::HoverMove || k == EventKind::HoverExit;
}

inline bool is_touch(EventKind k) { return k == EventKind::TouchDown || k == EventKind::TouchUp; }

// Wire names used by the session file format.
inline std::string_view wire_name(EventKind k) {
  switch (k) {
    case EventKind::HoverEnter: return "hover_enter";
    case EventKind::HoverMove: return "hover";
    case EventKind::HoverExit: return "hover_exit";
    case EventKind::TouchDown: return "down";
    case EventKind::TouchUp: return "up";
  }
  return "?";
}

inline std::optional<EventKind> parse_event_kind(std::string_view s) {
  if (s == "hover_enter") return EventKind::HoverEnter;
  if (s == "hover") return EventKind::HoverMove;
  if (s == "hover_exit") return EventKind::HoverExit;
  if (s == "down") return EventKind::TouchDown;
  if (s == "up") return EventKind::TouchUp;
  return std::nullopt;
}

// HoverEnter and HoverExit carry the last known position.
struct InputEvent {
  EventKind kind = EventKind::HoverMove;
  Micros t_us = 0;
  double x = 0.0;
  double y = 0.0;

  Point position() const { return {x, y}; }
  friend bool operator==(const InputEvent&, const InputEvent&) = default;
};

struct Click {
  Micros t_down_us = 0;
  Micros t_up_us = 0;
  double x = 0.0;
  double y = 0.0;
  std::optional<std::string> key_label;

  Point position() const { return {x, y}; }
  friend bool operator==(const Click&, const Click&) = default;
};

struct Session {
  ScreenSpec screen;
  InputMethod method = InputMethod::Stylus;
  int user_id = 0;
  std::vector<InputEvent> events;
  std::vector<Click> truth_clicks;
  std::uint64_t seed = 0;

  friend bool operator==(const Session&, const Session&) = default;
};

enum class ViolationKind {
  InvalidScreen,
  OrderViolation,
  RangeViolation,
  AlternationViolation,
  MissingHoverExit,
  HoverDuringTouch,
  ClickInvalid,
  ClickUnmatched,
};

inline std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::InvalidScreen: return "InvalidScreen";
    case ViolationKind::OrderViolation: return "OrderViolation";
    case ViolationKind::RangeViolation: return "RangeViolation";
    case ViolationKind::AlternationViolation: return "AlternationViolation";
    case ViolationKind::MissingHoverExit: return "MissingHoverExit";
    case ViolationKind::HoverDuringTouch: return "HoverDuringTouch";
    case ViolationKind::ClickInvalid: return "ClickInvalid";
    case ViolationKind::ClickUnmatched: return "ClickUnmatched";
  }
  return "?";
}

// `index` is an event index, except for Click* kinds where it is the index
// into truth_clicks.
struct Violation {
  ViolationKind kind;
  std::size_t index = 0;

  friend bool operator==(const Violation&, const Violation&) = default;
};

inline std::vector<Violation> validate_session(const Session& s) {
  std::vector<Violation> out;
  if (!s.screen.valid()) out.push_back({ViolationKind::InvalidScreen, 0});

  struct Stroke {
    Micros down;
    Micros up;
  };
  std::vector<Stroke> strokes;
  std::optional<Micros> open_down;
  std::size_t open_index = 0;

  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const InputEvent& e = s.events[i];
    if (i > 0 && e.t_us <= s.events[i - 1].t_us) out.push_back({ViolationKind::OrderViolation, i});
    if (e.t_us < 0 || !s.screen.contains(e.position())) out.push_back({ViolationKind::RangeViolation, i});

    switch (e.kind) {
      case EventKind::TouchDown:
        if (open_down) {
          out.push_back({ViolationKind::AlternationViolation, i});
        } else if (i == 0 || s.events[i - 1].kind != EventKind::HoverExit) {
          out.push_back({ViolationKind::MissingHoverExit, i});
        }
        open_down = e.t_us;
        open_index = i;
        break;
      case EventKind::TouchUp:
        if (!open_down) {
          out.push_back({ViolationKind::AlternationViolation, i});
        } else {
          strokes.push_back({*open_down, e.t_us});
          open_down.reset();
        }
        break;
      default:
        if (open_down) out.push_back({ViolationKind::HoverDuringTouch, i});
        break;
    }
  }
  if (open_down) out.push_back({ViolationKind::AlternationViolation, open_index});

  for (std::size_t c = 0; c < s.truth_clicks.size(); ++c) {
    const Click& k = s.truth_clicks[c];
    if (k.t_up_us <= k.t_down_us || !s.screen.contains(k.position())) {
      out.push_back({ViolationKind::ClickInvalid, c});
      continue;
    }
    std::size_t matches = 0;
    for (const Stroke& st : strokes) matches += (st.down == k.t_down_us && st.up == k.t_up_us) ? 1 : 0;
    if (matches != 1) out.push_back({ViolationKind::ClickUnmatched, c});
  }
  return out;
}

}  // namespace hoover
