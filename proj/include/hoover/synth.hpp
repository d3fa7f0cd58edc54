#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <iterator>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "hoover/events.hpp"
#include "hoover/layout.hpp"
#include "hoover/profile.hpp"
#include "hoover/rng.hpp"

namespace hoover {

struct BallGame {
  int n_clicks = 0;
};

struct Typing {
  std::string text;
};

using UseCase = std::variant<BallGame, Typing>;

// Normalized minimum-jerk position profile, s(0) = 0, s(1) = 1.
inline double min_jerk(double tau) {
  tau = std::clamp(tau, 0.0, 1.0);
  const double t3 = tau * tau * tau;
  return t3 * (10.0 - 15.0 * tau + 6.0 * tau * tau);
}

// Click-index range [begin, end) of consecutive keyboard clicks.
using ClickInterval = std::pair<std::size_t, std::size_t>;

struct MixedSession {
  Session session;
  std::vector<ClickInterval> typing_intervals;
};

inline constexpr double kBallMarginPx = 20.0;
inline constexpr double kAimSigmaPx = 10.0;
inline constexpr double kClickDurationSigmaLog = 0.3;
inline constexpr double kMinSampleIntervalMs = 5.0;
inline constexpr double kKeyboardLoadDelayMs = 600.0;

namespace detail {

struct ClickPlan {
  Point target;
  std::optional<std::string> label;
  double extra_gap_ms = 0.0;
};

inline void check_profile(const TrajectoryProfile& p) {
  if (!p.valid()) throw std::invalid_argument("trajectory profile out of range");
}

inline Point ball_target(const ScreenSpec& screen, Rng& rng) {
  return {rng.uniform(kBallMarginPx, screen.width_px - kBallMarginPx),
          rng.uniform(kBallMarginPx, screen.height_px - kBallMarginPx)};
}

inline std::vector<ClickPlan> plan_ball_game(const ScreenSpec& screen, const BallGame& g, Rng& rng) {
  if (g.n_clicks <= 0) throw std::invalid_argument("ball game needs at least one click");
  std::vector<ClickPlan> plans;
  for (int i = 0; i < g.n_clicks; ++i) plans.push_back({ball_target(screen, rng), std::nullopt, 0.0});
  return plans;
}

inline std::vector<ClickPlan> plan_typing(const KeyboardLayout& layout, const Typing& t, Rng& rng) {
  if (t.text.empty()) throw std::invalid_argument("typing text is empty");
  std::vector<ClickPlan> plans;
  for (char c : t.text) {
    const auto label = label_for_char(c);
    const Key* key = label ? layout.find(*label) : nullptr;
    if (!key) throw std::invalid_argument(std::string("character '") + c + "' is not on the keyboard");
    const Point center = key->rect.center();
    const double x = std::clamp(center.x + rng.normal(0.0, kAimSigmaPx), key->rect.x0 + 0.5, key->rect.x1 - 0.5);
    const double y = std::clamp(center.y + rng.normal(0.0, kAimSigmaPx), key->rect.y0 + 0.5, key->rect.y1 - 0.5);
    plans.push_back({{x, y}, key->label, 0.0});
  }
  return plans;
}

class TimelineWriter {
 public:
  TimelineWriter(Session& s, const TrajectoryProfile& p, Rng& rng) : s_(s), p_(p), rng_(rng) {}

  // Hover stream from `from` towards `to` over [t0, t_end): enter at t0,
  // a first sample on entry, then jittered samples; exit at t_end.
  void hover_segment(Point from, Point to, Micros t0, Micros t_end) {
    const Point dir = to - from;
    const double len = std::hypot(dir.x, dir.y);
    const Point unit = len > 0.0 ? (1.0 / len) * dir : Point{0.0, 0.0};
    const Point offset = p_.offset_bias_px + p_.direction_gain_px * unit;
    const double span = double(t_end - t0);

    auto sensed = [&](Micros t) {
      const double s = min_jerk(double(t - t0) / span);
      const Point ideal = from + s * dir;
      return clamp_to_screen({ideal.x + offset.x + rng_.normal(0.0, p_.path_noise_px),
                              ideal.y + offset.y + rng_.normal(0.0, p_.path_noise_px)});
    };

    Point last = sensed(t0);
    emit(EventKind::HoverEnter, t0, last);
    emit(EventKind::HoverMove, t0 + 1, last);
    Micros t = t0 + 1;
    for (;;) {
      const double step_ms = std::max(kMinSampleIntervalMs, rng_.normal(p_.sample_mean_ms, p_.sample_jitter_ms));
      t += static_cast<Micros>(std::llround(step_ms * 1000.0));
      if (t >= t_end) break;
      last = sensed(t);
      emit(EventKind::HoverMove, t, last);
    }
    emit(EventKind::HoverExit, t_end, last);
  }

  void emit(EventKind k, Micros t, Point p) { s_.events.push_back({k, t, p.x, p.y}); }

  Micros draw_gap_us(double extra_ms) {
    const double ms = rng_.lognormal_median(p_.interclick_median_ms, p_.interclick_sigma_log) + extra_ms;
    return static_cast<Micros>(std::llround(ms * 1000.0));
  }

  Micros draw_duration_us() {
    const double ms = std::max(5.0, rng_.lognormal_median(p_.click_duration_median_ms, kClickDurationSigmaLog));
    return static_cast<Micros>(std::llround(ms * 1000.0));
  }

 private:
  Point clamp_to_screen(Point p) const {
    const double xmax = std::nextafter(double(s_.screen.width_px), 0.0);
    const double ymax = std::nextafter(double(s_.screen.height_px), 0.0);
    return {std::clamp(p.x, 0.0, xmax), std::clamp(p.y, 0.0, ymax)};
  }

  Session& s_;
  const TrajectoryProfile& p_;
  Rng& rng_;
};

// Minimum hover time between lift-off and the next touch.
inline constexpr Micros kMinHoverGapUs = 10'000;

inline void write_timeline(Session& s, const std::vector<ClickPlan>& plans, const TrajectoryProfile& profile,
                           Rng& rng) {
  TimelineWriter w(s, profile, rng);
  Point from = ball_target(s.screen, rng);
  Micros seg_start = 0;
  Micros prev_down = 0;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const ClickPlan& plan = plans[i];
    Micros t_down = prev_down + w.draw_gap_us(plan.extra_gap_ms);
    t_down = std::max(t_down, seg_start + kMinHoverGapUs);
    const Micros t_up = t_down + w.draw_duration_us();

    w.hover_segment(from, plan.target, seg_start, t_down - 1);
    w.emit(EventKind::TouchDown, t_down, plan.target);
    w.emit(EventKind::TouchUp, t_up, plan.target);
    s.truth_clicks.push_back({t_down, t_up, plan.target.x, plan.target.y, plan.label});

    from = plan.target;
    prev_down = t_down;
    seg_start = t_up + 1;
  }
  // Device drifts away and leaves the hover band.
  const Point away = ball_target(s.screen, rng);
  const Micros t_leave = std::max(seg_start + kMinHoverGapUs, prev_down + w.draw_gap_us(0.0));
  w.hover_segment(from, away, seg_start, t_leave);
}

}  // namespace detail

inline Session synth_session(const ScreenSpec& screen, InputMethod method, const UseCase& use_case,
                             const TrajectoryProfile& profile, std::uint64_t seed, int user_id = 0) {
  detail::check_profile(profile);
  if (!screen.valid()) throw std::invalid_argument("invalid screen");
  Rng rng(seed);
  std::vector<detail::ClickPlan> plans;
  if (const auto* g = std::get_if<BallGame>(&use_case)) {
    plans = detail::plan_ball_game(screen, *g, rng);
  } else {
    plans = detail::plan_typing(make_layout(screen), std::get<Typing>(use_case), rng);
  }
  Session s{screen, method, user_id, {}, {}, seed};
  detail::write_timeline(s, plans, profile, rng);
  return s;
}

/// Mixed workload: blocks run back to back. Each typing block is preceded by
/// a tap on a text field in the upper half of the screen and a keyboard load
/// pause before the first key.
inline MixedSession synth_mixed(const ScreenSpec& screen, InputMethod method, const std::vector<UseCase>& blocks,
                                const TrajectoryProfile& profile, std::uint64_t seed, int user_id = 0) {
  detail::check_profile(profile);
  if (blocks.empty()) throw std::invalid_argument("mixed workload needs at least one block");
  Rng rng(seed);
  const KeyboardLayout layout = make_layout(screen);
  std::vector<detail::ClickPlan> plans;
  MixedSession out;
  for (const UseCase& b : blocks) {
    if (const auto* g = std::get_if<BallGame>(&b)) {
      auto more = detail::plan_ball_game(screen, *g, rng);
      plans.insert(plans.end(), more.begin(), more.end());
      continue;
    }
    const Point field{rng.uniform(kBallMarginPx, screen.width_px - kBallMarginPx),
                      rng.uniform(kBallMarginPx, screen.height_px * 0.5)};
    plans.push_back({field, std::nullopt, 0.0});
    auto keys = detail::plan_typing(layout, std::get<Typing>(b), rng);
    keys.front().extra_gap_ms = kKeyboardLoadDelayMs;
    out.typing_intervals.push_back({plans.size(), plans.size() + keys.size()});
    plans.insert(plans.end(), keys.begin(), keys.end());
  }
  out.session = Session{screen, method, user_id, {}, {}, seed};
  detail::write_timeline(out.session, plans, profile, rng);
  return out;
}

// Lowercase prose drawn from a fixed vocabulary, with occasional commas and
// full stops, cut to exactly n_chars characters.
inline std::string random_text(Rng& rng, std::size_t n_chars) {
  static constexpr std::string_view kWords[] = {
      "the",   "of",    "and",   "to",    "in",    "is",    "you",   "that",  "it",    "he",    "was",
      "for",   "on",    "are",   "as",    "with",  "his",   "they",  "at",    "be",    "this",  "have",
      "from",  "or",    "one",   "had",   "by",    "word",  "but",   "not",   "what",  "all",   "were",
      "we",    "when",  "your",  "can",   "said",  "there", "use",   "an",    "each",  "which", "she",
      "do",    "how",   "their", "if",    "will",  "up",    "other", "about", "out",   "many",  "then",
      "them",  "these", "so",    "some",  "her",   "would", "make",  "like",  "him",   "into",  "time",
      "has",   "look",  "two",   "more",  "write", "go",    "see",   "number", "no",   "way",   "could",
      "people", "my",   "than",  "first", "water", "been",  "call",  "who",   "oil",   "its",   "now",
      "find",  "long",  "down",  "day",   "did",   "get",   "come",  "made",  "may",   "part",  "quick",
      "brown", "fox",   "jumps", "over",  "lazy",  "dog",   "zero",  "jazz",  "quiz",  "box",   "key"};
  std::string out;
  while (out.size() < n_chars) {
    if (!out.empty()) {
      const std::uint64_t r = rng.below(12);
      out += r == 0 ? ", " : r == 1 ? ". " : " ";
    }
    out += kWords[rng.below(std::size(kWords))];
  }
  out.resize(n_chars);
  return out;
}

// Typing runs recovered from labeled truth clicks.
inline std::vector<ClickInterval> labeled_runs(const Session& s) {
  std::vector<ClickInterval> runs;
  for (std::size_t i = 0; i < s.truth_clicks.size();) {
    if (!s.truth_clicks[i].key_label) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.truth_clicks.size() && s.truth_clicks[j].key_label) ++j;
    runs.push_back({i, j});
    i = j;
  }
  return runs;
}

}  // namespace hoover
