#include <gtest/gtest.h>

#include "../support/dispatch_oracle.hpp"
#include "hoover/attacker.hpp"
#include "hoover/profile.hpp"
#include "hoover/synth.hpp"

using namespace hoover;

namespace {

const ScreenSpec kScreen{720, 1280, 20.0};

// Builds a session from touch (down_ms, up_ms) pairs. Hovers run every 19 ms
// between touches, entering 1 ms after lift-off and leaving 1 ms before the
// next touch.
Session scripted(const std::vector<std::pair<int, int>>& touches, int tail_ms = 200) {
  Session s;
  s.screen = kScreen;
  auto hovers = [&](Micros from, Micros to) {
    s.events.push_back({EventKind::HoverEnter, from, 300, 600});
    Micros t = from + 1000;
    for (; t < to; t += 19000) s.events.push_back({EventKind::HoverMove, t, 300.0 + double(t) / 1e4, 600});
    s.events.push_back({EventKind::HoverExit, to, 300, 600});
  };
  Micros prev = 0;
  for (auto [down, up] : touches) {
    hovers(prev, Micros(down) * 1000 - 1000);
    s.events.push_back({EventKind::TouchDown, Micros(down) * 1000, 300, 600});
    s.events.push_back({EventKind::TouchUp, Micros(up) * 1000, 300, 600});
    s.truth_clicks.push_back({Micros(down) * 1000, Micros(up) * 1000, 300, 600, std::nullopt});
    prev = Micros(up) * 1000 + 1000;
  }
  hovers(prev, prev + Micros(tail_ms) * 1000);
  return s;
}

}  // namespace

TEST(Attacker, SingleClickYieldsFourHoversUnseen) {
  const Session s = scripted({{1000, 1060}});
  ASSERT_TRUE(validate_session(s).empty());
  const AttackResult r = run_attack(s, {}, {});
  ASSERT_EQ(r.captures.size(), 1u);
  const CapturedClick& c = r.captures[0];
  EXPECT_EQ(c.t_down_ms, 1000);
  EXPECT_EQ(c.dt_up_ms, 60);
  ASSERT_EQ(c.hovers.size(), 4u);
  EXPECT_EQ(c.hovers[0].dt_ms, 61.0);
  EXPECT_EQ(c.hovers[1].dt_ms, 62.0);
  EXPECT_EQ(c.hovers[2].dt_ms, 81.0);
  EXPECT_EQ(c.hovers[3].dt_ms, 100.0);
  EXPECT_EQ(r.audit, StealthAudit{});
}

TEST(Attacker, ForegroundOnlyHoverStarvesTheOverlay) {
  DispatchPolicy p;
  p.foreground_only_hover = true;
  const AttackResult r = run_attack(scripted({{1000, 1060}, {2000, 2050}}), {}, p);
  ASSERT_EQ(r.captures.size(), 2u);
  for (const auto& c : r.captures) EXPECT_TRUE(c.hovers.empty());
  EXPECT_EQ(r.audit, StealthAudit{});
}

TEST(Attacker, QuickSecondClickLandsOnTheOverlay) {
  // Only three hovers fit between the first lift-off and the next touch, so
  // the overlay is still up when it comes.
  const Session s = scripted({{1000, 1060}, {1100, 1160}});
  const AttackResult r = run_attack(s, {}, {});
  EXPECT_EQ(r.audit.obstructed_clicks, 1);
  EXPECT_EQ(r.audit.touches_to_overlay, 1);
  EXPECT_EQ(r.captures[0].hovers.size(), 3u);

  AttackerConfig keep;
  keep.retire_when_full = false;
  EXPECT_EQ(run_attack(s, keep, {}).audit.obstructed_clicks, 1);
}

TEST(Attacker, EarlyRetireAvoidsAClickThatWindowTimingWouldHit) {
  // Four hovers are in by 1100 ms; the next touch at 1125 ms falls inside the
  // 70 ms window but after the early retire.
  const Session s = scripted({{1000, 1060}, {1125, 1180}});
  EXPECT_EQ(run_attack(s, {}, {}).audit.obstructed_clicks, 0);
  AttackerConfig keep;
  keep.retire_when_full = false;
  EXPECT_EQ(run_attack(s, keep, {}).audit.obstructed_clicks, 1);
}

TEST(Attacker, DownAnchorClosesTheWindowEarlier) {
  AttackerConfig cfg;
  cfg.window_anchor = WindowAnchor::TouchDown;
  cfg.retire_when_full = false;
  const AttackResult r = run_attack(scripted({{1000, 1060}}), cfg, {});
  ASSERT_EQ(r.captures.size(), 1u);
  // Overlay goes at 1070 ms: enter at 1061 and move at 1062 only.
  EXPECT_EQ(r.captures[0].hovers.size(), 2u);
}

TEST(Attacker, SmallViewRulesDefeatTheListener) {
  DispatchPolicy p;
  p.min_view_px = 48;
  p.forbid_watch_outside = true;
  const AttackResult r = run_attack(scripted({{1000, 1060}, {2000, 2060}}), {}, p);
  EXPECT_GT(r.audit.illegal_commands, 0);
  EXPECT_TRUE(r.captures.empty());
}

TEST(Attacker, FallbackListenerSurvivesSizeRuleAlone) {
  DispatchPolicy p;
  p.min_view_px = 48;
  const Session s = scripted({{1000, 1060}});
  AttackerConfig cfg;
  const AttackResult r = run_attack(s, cfg, p);
  EXPECT_EQ(r.audit.illegal_commands, 1);
  EXPECT_EQ(r.captures.size(), 1u);
  cfg.fallback_listener = false;
  EXPECT_TRUE(run_attack(s, cfg, p).captures.empty());
}

TEST(Attacker, FilteredTouchesAreLoggedWhenOverlayStaysUp) {
  DispatchPolicy p;
  p.filter_touches_when_obscured = true;
  AttackerConfig cfg;
  cfg.activation_ms = 5000;
  cfg.retire_when_full = false;
  const AttackResult r = run_attack(scripted({{1000, 1060}, {1500, 1560}}), cfg, p);
  std::size_t blocked = 0;
  for (const auto& rec : r.log.records) blocked += std::holds_alternative<Blocked>(rec);
  EXPECT_EQ(blocked, 2u);
  ASSERT_EQ(r.log.obstructions.size(), 1u);
  EXPECT_TRUE(r.log.obstructions[0].filtered);
}

TEST(Attacker, RejectsBadConfig) {
  AttackerConfig cfg;
  cfg.activation_ms = 0;
  EXPECT_THROW(run_attack(scripted({{1000, 1060}}), cfg, {}), std::invalid_argument);
}

namespace {

struct Corpus {
  Session session;
  AttackResult result;
};

std::vector<Corpus> generated(std::size_t n) {
  std::vector<Corpus> out;
  for (std::size_t i = 0; i < n; ++i) {
    const InputMethod m = i % 2 ? InputMethod::Finger : InputMethod::Stylus;
    Session s = synth_session(kScreen, m, BallGame{60}, default_profile(m, int(i)), 100 + i, int(i));
    AttackResult r = run_attack(s, {}, {});
    out.push_back({std::move(s), std::move(r)});
  }
  return out;
}

}  // namespace

// Every captured hover is an event the session really contains, delivered to
// the overlay, in order, no earlier than the click's touch down.
TEST(AttackerProperties, Provenance) {
  for (const auto& [s, r] : generated(10)) {
    ASSERT_EQ(r.captures.size(), s.truth_clicks.size());
    for (std::size_t c = 0; c < r.captures.size(); ++c) {
      const CapturedClick& cap = r.captures[c];
      const Click& truth = s.truth_clicks[c];
      EXPECT_EQ(cap.click_index, int(c));
      EXPECT_EQ(cap.user_id, s.user_id);
      EXPECT_EQ(cap.t_down_ms, truth.t_down_us / 1000);
      EXPECT_EQ(cap.dt_up_ms, truth.t_up_us / 1000 - truth.t_down_us / 1000);
      EXPECT_LE(cap.hovers.size(), 4u);
      double prev = -1.0;
      for (const HoverSample& h : cap.hovers) {
        EXPECT_GT(h.dt_ms, prev);
        prev = h.dt_ms;
        const Micros t = cap.t_down_ms * 1000 + std::llround(h.dt_ms * 1000);
        const auto it = std::find_if(s.events.begin(), s.events.end(), [&](const InputEvent& e) {
          return e.t_us == t && e.x == h.x && e.y == h.y && (e.kind == EventKind::HoverEnter || e.kind == EventKind::HoverMove);
        });
        EXPECT_NE(it, s.events.end());
        EXPECT_GE(t, truth.t_up_us);
        if (c + 1 < s.truth_clicks.size()) {
          EXPECT_LT(t, s.truth_clicks[c + 1].t_down_us);
        }
      }
    }
  }
}

TEST(AttackerProperties, IssuedCommandsReplayThroughTheReferenceDispatcher) {
  for (const auto& [s, r] : generated(6)) {
    const DeliveryLog ref = hoover::testing::oracle_dispatch(s, r.commands, {}, {foreground_app_view(s.screen)});
    EXPECT_TRUE(hoover::testing::same_log(ref, r.log));
    EXPECT_EQ(r.audit.illegal_commands, 0);
  }
}

TEST(AttackerProperties, CaptureRateOnLongGaps) {
  std::size_t eligible = 0, full = 0;
  for (const auto& [s, r] : generated(10)) {
    for (std::size_t c = 0; c + 1 < r.captures.size(); ++c) {
      if (s.truth_clicks[c + 1].t_down_us - s.truth_clicks[c].t_down_us <= 180'000) continue;
      ++eligible;
      full += r.captures[c].hovers.size() == 4;
    }
  }
  ASSERT_GT(eligible, 400u);
  EXPECT_GE(double(full) / double(eligible), 0.99);
}
