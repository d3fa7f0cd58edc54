#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "hoover/capture.hpp"
#include "hoover/dispatch.hpp"
#include "hoover/events.hpp"

namespace hoover {

enum class WindowAnchor { TouchDown, TouchUp };

struct AttackerConfig {
  double activation_ms = 70.0;
  int max_hovers = 4;
  Micros reaction_latency_us = 1000;
  WindowAnchor window_anchor = WindowAnchor::TouchUp;
  // When a 0px listener is refused for its size, retry with the smallest
  // permitted square in the bottom-right corner.
  bool fallback_listener = true;
  // Drop the overlay as soon as max_hovers samples are in, instead of
  // waiting for the activation window to run out.
  bool retire_when_full = true;

  bool valid() const { return activation_ms > 0.0 && max_hovers >= 1 && reaction_latency_us >= 0; }
};

struct StealthAudit {
  int obstructed_clicks = 0;
  int touches_to_overlay = 0;
  int illegal_commands = 0;

  friend bool operator==(const StealthAudit&, const StealthAudit&) = default;
};

struct AttackResult {
  std::vector<CapturedClick> captures;
  StealthAudit audit;
  DeliveryLog log;
  std::vector<StackCommand> commands;  // everything the attacker issued, in order
};

inline constexpr int kListenerViewId = 9001;
inline constexpr int kOverlayViewId = 9002;
inline constexpr int kListenerZ = 9001;
inline constexpr int kOverlayZ = 9002;

inline ViewSpec listener_view(Rect bounds = {}) {
  return {kListenerViewId, kListenerZ, bounds, true, true, Owner::AttackerService};
}

inline ViewSpec overlay_view(const ScreenSpec& screen) {
  return {kOverlayViewId, kOverlayZ, screen.bounds(), true, false, Owner::AttackerService};
}

namespace detail {

class HooverController {
 public:
  HooverController(const Session& s, const AttackerConfig& cfg, const DispatchPolicy& policy)
      : s_(s), cfg_(cfg), policy_(policy), d_(s.screen, policy, {foreground_app_view(s.screen)}),
        activation_us_(static_cast<Micros>(std::llround(cfg.activation_ms * 1000.0))) {}

  AttackResult run() {
    pending_listener_ = Micros{0};
    for (std::size_t i = 0; i < s_.events.size(); ++i) {
      const InputEvent& e = s_.events[i];
      flush_before(e.t_us);
      const std::size_t first_new = d_.log().records.size();
      d_.deliver(e, i);
      react(first_new);
    }
    flush_before(std::numeric_limits<Micros>::max());
    if (current_) out_.captures.push_back(*current_);

    out_.log = d_.take_log();
    out_.audit.obstructed_clicks = static_cast<int>(out_.log.obstructions.size());
    out_.audit.illegal_commands = static_cast<int>(out_.log.rejected.size());
    for (const DeliveryRecord& r : out_.log.records)
      if (const auto* full = std::get_if<Delivered>(&r))
        if (full->kind == EventKind::TouchDown && full->receiver && is_attacker_view(*full->receiver))
          ++out_.audit.touches_to_overlay;
    return std::move(out_);
  }

 private:
  static bool is_attacker_view(int id) { return id == kListenerViewId || id == kOverlayViewId; }

  bool issue(Micros t, std::variant<AddView, RemoveView> action) {
    StackCommand cmd{t, std::move(action)};
    const std::size_t idx = out_.commands.size();
    out_.commands.push_back(cmd);
    return !d_.apply(cmd, idx).has_value();
  }

  // Runs every pending command strictly earlier than `t`, oldest first.
  void flush_before(Micros t) {
    for (;;) {
      Micros best = t;
      int which = -1;
      if (pending_listener_ && *pending_listener_ < best) best = *pending_listener_, which = 0;
      if (pending_add_ && *pending_add_ < best) best = *pending_add_, which = 1;
      if (pending_remove_ && *pending_remove_ < best) best = *pending_remove_, which = 2;
      if (which < 0) return;

      if (which == 0) {
        pending_listener_.reset();
        if (!issue(best, AddView{listener_view()}) && cfg_.fallback_listener && policy_.min_view_px > 0) {
          const double side = policy_.min_view_px;
          const Rect corner{s_.screen.width_px - side, s_.screen.height_px - side, double(s_.screen.width_px),
                            double(s_.screen.height_px)};
          issue(best, AddView{listener_view(corner)});
        }
      } else if (which == 1) {
        pending_add_.reset();
        if (!overlay_live_) overlay_live_ = issue(best, AddView{overlay_view(s_.screen)});
      } else {
        pending_remove_.reset();
        if (overlay_live_) {
          issue(best, RemoveView{kOverlayViewId});
          overlay_live_ = false;
        } else {
          pending_add_.reset();
        }
      }
    }
  }

  void react(std::size_t first_new) {
    const auto& records = d_.log().records;
    std::optional<Micros> down, up;
    for (std::size_t r = first_new; r < records.size(); ++r) {
      const DeliveryRecord& rec = records[r];
      if (const auto* n = std::get_if<OutsideNotify>(&rec)) {
        if (n->receiver != kListenerViewId) continue;
        if (n->kind == EventKind::TouchDown) down = n->t_us;
        if (n->kind == EventKind::TouchUp) up = n->t_us;
      } else if (const auto* f = std::get_if<Delivered>(&rec)) {
        if (!f->receiver || !is_attacker_view(*f->receiver)) continue;
        if (f->kind == EventKind::TouchDown) down = f->t_us;
        if (f->kind == EventKind::TouchUp) up = f->t_us;
        if ((f->kind == EventKind::HoverEnter || f->kind == EventKind::HoverMove) && *f->receiver == kOverlayViewId)
          on_hover(*f);
      }
    }
    if (down) on_down(*down);
    if (up) on_up(*up);
  }

  void on_down(Micros t) {
    if (current_) out_.captures.push_back(*current_);
    current_ = CapturedClick{s_.user_id, next_index_++, t / 1000, 0, {}, s_.method};
    pending_remove_.reset();
    if (!overlay_live_ && !pending_add_) pending_add_ = t + cfg_.reaction_latency_us;
    if (cfg_.window_anchor == WindowAnchor::TouchDown) pending_remove_ = t + activation_us_;
  }

  void on_up(Micros t) {
    if (current_) current_->dt_up_ms = t / 1000 - current_->t_down_ms;
    if (cfg_.window_anchor == WindowAnchor::TouchUp) pending_remove_ = t + activation_us_;
  }

  void on_hover(const Delivered& f) {
    if (!current_ || current_->hovers.size() >= static_cast<std::size_t>(cfg_.max_hovers)) return;
    const double dt_ms = double(f.t_us - current_->t_down_ms * 1000) / 1000.0;
    current_->hovers.push_back({dt_ms, f.x, f.y});
    if (cfg_.retire_when_full && current_->hovers.size() == static_cast<std::size_t>(cfg_.max_hovers)) {
      const Micros t = f.t_us + cfg_.reaction_latency_us;
      if (!pending_remove_ || t < *pending_remove_) pending_remove_ = t;
    }
  }

  const Session& s_;
  const AttackerConfig& cfg_;
  const DispatchPolicy& policy_;
  Dispatcher d_;
  Micros activation_us_;
  bool overlay_live_ = false;
  std::optional<Micros> pending_listener_, pending_add_, pending_remove_;
  std::optional<CapturedClick> current_;
  int next_index_ = 0;
  AttackResult out_;
};

}  // namespace detail

/// Closed-loop simulation of the attacker against one session: a 0px
/// watch-outside listener learns touch times, and a transparent full-screen
/// overlay is raised after each touch down and dropped `activation_ms` after
/// the configured anchor to harvest the following hover events.
inline AttackResult run_attack(const Session& session, const AttackerConfig& cfg, const DispatchPolicy& policy) {
  if (!cfg.valid()) throw std::invalid_argument("attacker config out of range");
  return detail::HooverController(session, cfg, policy).run();
}

}  // namespace hoover
