#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hoover/events.hpp"
#include "hoover/geometry.hpp"

namespace hoover {

enum class Owner { Foreground, AttackerService };

inline std::string_view to_string(Owner o) { return o == Owner::Foreground ? "foreground" : "attacker"; }

struct ViewSpec {
  int view_id = 0;
  int z = 0;
  Rect bounds;
  bool intercepts_events = true;  // false: passive view, ignored by dispatch
  bool watch_outside = false;
  Owner owner = Owner::Foreground;

  friend bool operator==(const ViewSpec&, const ViewSpec&) = default;
};

struct AddView {
  ViewSpec view;
  friend bool operator==(const AddView&, const AddView&) = default;
};

struct RemoveView {
  int view_id = 0;
  friend bool operator==(const RemoveView&, const RemoveView&) = default;
};

struct StackCommand {
  Micros t_us = 0;
  std::variant<AddView, RemoveView> action;

  friend bool operator==(const StackCommand&, const StackCommand&) = default;
};

struct DispatchPolicy {
  bool foreground_only_hover = false;
  bool filter_touches_when_obscured = false;
  int min_view_px = 0;  // 0: unrestricted
  bool forbid_watch_outside = false;

  friend bool operator==(const DispatchPolicy&, const DispatchPolicy&) = default;
};

// Full delivery of one event. `receiver` is empty when no view accepts it.
struct Delivered {
  Micros t_us = 0;
  EventKind kind = EventKind::HoverMove;
  std::size_t event_index = 0;
  std::optional<int> receiver;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Delivered&, const Delivered&) = default;
};

// Watch-outside notification: the receiver learns only that a touch happened.
struct OutsideNotify {
  Micros t_us = 0;
  EventKind kind = EventKind::TouchDown;
  int receiver = 0;

  friend bool operator==(const OutsideNotify&, const OutsideNotify&) = default;
};

// A touch withheld from `receiver` because a foreign window covered it.
struct Blocked {
  Micros t_us = 0;
  EventKind kind = EventKind::TouchDown;
  std::size_t event_index = 0;
  int receiver = 0;

  friend bool operator==(const Blocked&, const Blocked&) = default;
};

using DeliveryRecord = std::variant<Delivered, OutsideNotify, Blocked>;

// A touch down that landed on an attacker-owned view.
struct Obstruction {
  Micros t_us = 0;
  std::size_t event_index = 0;
  int receiver = 0;
  bool filtered = false;  // the covered foreground view got a Blocked record

  friend bool operator==(const Obstruction&, const Obstruction&) = default;
};

struct IllegalCommand {
  Micros t_us = 0;
  std::size_t command_index = 0;
  std::string reason;

  friend bool operator==(const IllegalCommand&, const IllegalCommand&) = default;
};

struct DeliveryLog {
  std::vector<DeliveryRecord> records;
  std::vector<Obstruction> obstructions;
  std::vector<IllegalCommand> rejected;

  friend bool operator==(const DeliveryLog&, const DeliveryLog&) = default;
};

inline ViewSpec foreground_app_view(const ScreenSpec& screen) {
  return {0, 0, screen.bounds(), true, false, Owner::Foreground};
}

using ViewStack = std::vector<ViewSpec>;

// Topmost active view containing `p`; `foreground_only` restricts to
// foreground-owned views.
inline const ViewSpec* topmost_at(const ViewStack& views, Point p, bool foreground_only = false) {
  const ViewSpec* best = nullptr;
  for (const ViewSpec& v : views) {
    if (!v.intercepts_events || !v.bounds.contains(p)) continue;
    if (foreground_only && v.owner != Owner::Foreground) continue;
    if (!best || v.z > best->z) best = &v;
  }
  return best;
}

/// True iff the topmost foreground view at `p` lies under an active view of
/// another owner that also contains `p`.
inline bool coverage_check(const ViewStack& views, Point p) {
  const ViewSpec* fg = topmost_at(views, p, true);
  if (!fg) return false;
  for (const ViewSpec& v : views)
    if (v.intercepts_events && v.owner != fg->owner && v.z > fg->z && v.bounds.contains(p)) return true;
  return false;
}

// Reason an Add would be refused, or nullopt if it is legal.
inline std::optional<std::string> add_violation(const ViewStack& views, const ViewSpec& v, const ScreenSpec& screen,
                                                const DispatchPolicy& policy) {
  for (const ViewSpec& live : views) {
    if (live.view_id == v.view_id) return "view id " + std::to_string(v.view_id) + " already live";
    if (live.z == v.z) return "z " + std::to_string(v.z) + " already in use";
  }
  if (v.bounds.x1 < v.bounds.x0 || v.bounds.y1 < v.bounds.y0) return "inverted bounds";
  if (!v.bounds.empty() && !v.bounds.inside(screen.bounds())) return "bounds outside screen";
  if (v.owner != Owner::Foreground) {
    if (policy.min_view_px > 0 && (v.bounds.width() < policy.min_view_px || v.bounds.height() < policy.min_view_px))
      return "view smaller than " + std::to_string(policy.min_view_px) + "px";
    if (policy.forbid_watch_outside && v.watch_outside) return "watch-outside flag forbidden";
  }
  return std::nullopt;
}

/// Incremental dispatch engine. Feed commands and events in time order;
/// on equal timestamps the event goes first.
class Dispatcher {
 public:
  Dispatcher(ScreenSpec screen, DispatchPolicy policy, ViewStack initial)
      : screen_(screen), policy_(policy), views_(std::move(initial)) {
    if (policy_.min_view_px < 0) throw std::invalid_argument("min_view_px must be >= 0");
  }

  // Returns the rejection if the command is illegal; the stack is unchanged then.
  std::optional<IllegalCommand> apply(const StackCommand& cmd, std::size_t command_index) {
    std::optional<std::string> reason;
    if (const auto* add = std::get_if<AddView>(&cmd.action)) {
      reason = add_violation(views_, add->view, screen_, policy_);
      if (!reason) views_.push_back(add->view);
    } else {
      const int id = std::get<RemoveView>(cmd.action).view_id;
      auto it = std::find_if(views_.begin(), views_.end(), [&](const ViewSpec& v) { return v.view_id == id; });
      if (it == views_.end()) {
        reason = "remove of view " + std::to_string(id) + " which is not live";
      } else {
        views_.erase(it);
      }
    }
    if (!reason) return std::nullopt;
    IllegalCommand ic{cmd.t_us, command_index, *reason};
    log_.rejected.push_back(ic);
    return ic;
  }

  void deliver(const InputEvent& e, std::size_t event_index) {
    const Point p = e.position();
    if (is_hover(e.kind)) {
      const ViewSpec* top = topmost_at(views_, p, policy_.foreground_only_hover);
      push_full(e, event_index, top ? std::optional<int>(top->view_id) : std::nullopt);
      return;
    }

    if (e.kind == EventKind::TouchDown) {
      Stream st;
      const ViewSpec* top = topmost_at(views_, p);
      if (top) st.receiver = top->view_id;
      push_full(e, event_index, st.receiver);
      if (top && top->owner != Owner::Foreground) {
        Obstruction ob{e.t_us, event_index, top->view_id, false};
        if (policy_.filter_touches_when_obscured && coverage_check(views_, p)) {
          const ViewSpec* fg = topmost_at(views_, p, true);
          st.blocked = fg->view_id;
          log_.records.emplace_back(Blocked{e.t_us, e.kind, event_index, fg->view_id});
          ob.filtered = true;
        }
        log_.obstructions.push_back(ob);
      }
      notify_outside(e, st.receiver);
      stream_ = st;
      return;
    }

    // TouchUp completes the stream bound at TouchDown, whatever the stack is now.
    const Stream st = stream_.value_or(Stream{});
    push_full(e, event_index, st.receiver);
    if (st.blocked) log_.records.emplace_back(Blocked{e.t_us, e.kind, event_index, *st.blocked});
    notify_outside(e, st.receiver);
    stream_.reset();
  }

  const DeliveryLog& log() const { return log_; }
  DeliveryLog take_log() { return std::move(log_); }
  const ViewStack& views() const { return views_; }

  bool is_live(int view_id) const {
    return std::any_of(views_.begin(), views_.end(), [&](const ViewSpec& v) { return v.view_id == view_id; });
  }

 private:
  struct Stream {
    std::optional<int> receiver;
    std::optional<int> blocked;
  };

  void push_full(const InputEvent& e, std::size_t idx, std::optional<int> receiver) {
    log_.records.emplace_back(Delivered{e.t_us, e.kind, idx, receiver, e.x, e.y});
  }

  void notify_outside(const InputEvent& e, std::optional<int> receiver) {
    std::vector<const ViewSpec*> watchers;
    for (const ViewSpec& v : views_)
      if (v.intercepts_events && v.watch_outside && (!receiver || v.view_id != *receiver)) watchers.push_back(&v);
    std::sort(watchers.begin(), watchers.end(), [](const ViewSpec* a, const ViewSpec* b) { return a->z > b->z; });
    for (const ViewSpec* v : watchers) log_.records.emplace_back(OutsideNotify{e.t_us, e.kind, v->view_id});
  }

  ScreenSpec screen_;
  DispatchPolicy policy_;
  ViewStack views_;
  std::optional<Stream> stream_;
  DeliveryLog log_;
};

inline DeliveryLog dispatch(const Session& session, const std::vector<StackCommand>& commands,
                            const DispatchPolicy& policy, ViewStack initial) {
  for (std::size_t i = 1; i < commands.size(); ++i)
    if (commands[i].t_us < commands[i - 1].t_us) throw std::invalid_argument("stack commands must be time-ordered");
  Dispatcher d(session.screen, policy, std::move(initial));
  std::size_t c = 0;
  for (std::size_t i = 0; i < session.events.size(); ++i) {
    const InputEvent& e = session.events[i];
    for (; c < commands.size() && commands[c].t_us < e.t_us; ++c) d.apply(commands[c], c);
    d.deliver(e, i);
  }
  for (; c < commands.size(); ++c) d.apply(commands[c], c);
  return d.take_log();
}

inline DeliveryLog dispatch(const Session& session, const std::vector<StackCommand>& commands,
                            const DispatchPolicy& policy) {
  return dispatch(session, commands, policy, {foreground_app_view(session.screen)});
}

// One JSON object per line, for inspection.
inline std::string delivery_log_jsonl(const DeliveryLog& log) {
  std::string out;
  auto line = [&](const nlohmann::ordered_json& j) {
    out += j.dump();
    out += '\n';
  };
  for (const DeliveryRecord& r : log.records) {
    nlohmann::ordered_json j;
    std::visit(
        [&](const auto& rec) {
          using T = std::decay_t<decltype(rec)>;
          j["t_us"] = rec.t_us;
          j["kind"] = wire_name(rec.kind);
          if constexpr (std::is_same_v<T, Delivered>) {
            j["delivery"] = "full";
            j["receiver"] = rec.receiver ? nlohmann::ordered_json(*rec.receiver) : nlohmann::ordered_json(nullptr);
          } else if constexpr (std::is_same_v<T, OutsideNotify>) {
            j["delivery"] = "outside";
            j["receiver"] = rec.receiver;
          } else {
            j["delivery"] = "blocked";
            j["receiver"] = rec.receiver;
          }
        },
        r);
    line(j);
  }
  for (const Obstruction& o : log.obstructions) {
    nlohmann::ordered_json j;
    j["obstruction"] = {{"t_us", o.t_us}, {"receiver", o.receiver}, {"filtered", o.filtered}};
    line(j);
  }
  for (const IllegalCommand& ic : log.rejected) {
    nlohmann::ordered_json j;
    j["illegal_command"] = {{"t_us", ic.t_us}, {"index", ic.command_index}, {"reason", ic.reason}};
    line(j);
  }
  return out;
}

}  // namespace hoover
