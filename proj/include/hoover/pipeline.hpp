#pragma once

// Batch stages shared by the command-line front end and the end-to-end
// checks. Every stage maps inputs to named output byte strings; nothing here
// touches the file system or the clock.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hoover/analysis.hpp"
#include "hoover/attacker.hpp"
#include "hoover/capture.hpp"
#include "hoover/layout.hpp"
#include "hoover/learn/dataset.hpp"
#include "hoover/learn/model.hpp"
#include "hoover/learn/model_io.hpp"
#include "hoover/learn/validation.hpp"
#include "hoover/profile.hpp"
#include "hoover/session_io.hpp"
#include "hoover/synth.hpp"

namespace hoover::pipeline {

// Bad flags or configuration.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs that do not parse or do not agree with each other.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OutputFile {
  std::string name;
  std::string bytes;
};

using Outputs = std::vector<OutputFile>;

namespace detail {

inline void reject_unknown_keys(const ConfigMap& cfg, std::initializer_list<std::string_view> known) {
  for (const auto& [key, value] : cfg) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw UsageError("unknown config key '" + key + "'");
  }
}

template <class Int>
Int config_int(const ConfigMap& cfg, const std::string& key, Int fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  Int v{};
  const auto& s = it->second;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw UsageError("config key '" + key + "': not an integer: '" + s + "'");
  return v;
}

inline bool config_bool(const ConfigMap& cfg, const std::string& key, bool fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw UsageError("config key '" + key + "': expected true or false");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// synth

enum class Workload { Typing, Ball, Mixed };

struct SynthConfig {
  int users = 20;
  int first_user = 0;
  InputMethod method = InputMethod::Stylus;
  Workload workload = Workload::Typing;
  std::size_t text_chars = 100;
  std::optional<std::string> text;  // fixed text for every user instead of random prose
  int clicks = 100;                 // per ball-game block
  int blocks = 3;                   // (ball game, typing) pairs in a mixed workload
  ScreenSpec screen;
  ConfigMap profile_overrides;
};

inline SynthConfig synth_config(const ConfigMap& cfg) {
  detail::reject_unknown_keys(cfg, {"users", "first_user", "method", "workload", "text_chars", "text", "clicks",
                                    "blocks", "width_px", "height_px", "hover_range_mm", "sample_mean_ms",
                                    "sample_jitter_ms", "path_noise_px", "offset_bias_px", "direction_gain_px",
                                    "click_duration_median_ms", "interclick_median_ms", "interclick_sigma_log"});
  SynthConfig c;
  c.users = detail::config_int(cfg, "users", c.users);
  c.first_user = detail::config_int(cfg, "first_user", c.first_user);
  c.text_chars = detail::config_int(cfg, "text_chars", c.text_chars);
  c.clicks = detail::config_int(cfg, "clicks", c.clicks);
  c.blocks = detail::config_int(cfg, "blocks", c.blocks);
  c.screen.width_px = detail::config_int(cfg, "width_px", c.screen.width_px);
  c.screen.height_px = detail::config_int(cfg, "height_px", c.screen.height_px);
  if (auto it = cfg.find("hover_range_mm"); it != cfg.end())
    c.screen.hover_range_mm = config_number("hover_range_mm", it->second);
  if (auto it = cfg.find("method"); it != cfg.end()) {
    if (it->second != "stylus" && it->second != "finger") throw UsageError("method must be stylus or finger");
    c.method = parse_method(it->second);
  }
  if (auto it = cfg.find("workload"); it != cfg.end()) {
    if (it->second == "typing") c.workload = Workload::Typing;
    else if (it->second == "ball") c.workload = Workload::Ball;
    else if (it->second == "mixed") c.workload = Workload::Mixed;
    else throw UsageError("workload must be typing, ball or mixed");
  }
  if (auto it = cfg.find("text"); it != cfg.end()) c.text = it->second;
  for (const auto& [k, v] : cfg) c.profile_overrides[k] = v;

  if (c.users < 1 || c.first_user < 0 || c.first_user + c.users > 0xFFFF) throw UsageError("users out of range");
  if (c.text_chars < 1 || c.clicks < 1 || c.blocks < 1) throw UsageError("workload sizes must be positive");
  if (!c.screen.valid()) throw UsageError("invalid screen size");
  if (c.text) {
    if (c.text->empty()) throw UsageError("text is empty");
    for (char ch : *c.text)
      if (!label_for_char(ch)) throw UsageError(std::string("text has a character with no key: '") + ch + "'");
  }
  return c;
}

inline std::string session_file_name(int user_id) { return "session_" + std::to_string(user_id) + ".jsonl"; }

inline Session synth_user(const SynthConfig& c, int user_id, std::uint64_t seed) {
  const std::uint64_t base = derive_seed(seed, static_cast<std::uint64_t>(user_id));
  TrajectoryProfile profile = default_profile(c.method, user_id);
  try {
    apply_profile_overrides(profile, c.profile_overrides);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  Rng text_rng(derive_seed(base, 1));
  auto text = [&] { return c.text ? *c.text : random_text(text_rng, c.text_chars); };
  const std::uint64_t session_seed = derive_seed(base, 0);
  switch (c.workload) {
    case Workload::Typing: return synth_session(c.screen, c.method, Typing{text()}, profile, session_seed, user_id);
    case Workload::Ball: return synth_session(c.screen, c.method, BallGame{c.clicks}, profile, session_seed, user_id);
    case Workload::Mixed: {
      std::vector<UseCase> blocks;
      for (int b = 0; b < c.blocks; ++b) {
        blocks.push_back(BallGame{c.clicks});
        blocks.push_back(Typing{text()});
      }
      return synth_mixed(c.screen, c.method, blocks, profile, session_seed, user_id).session;
    }
  }
  throw std::logic_error("unreachable");
}

inline Outputs run_synth(const SynthConfig& c, std::uint64_t seed) {
  Outputs out;
  for (int u = c.first_user; u < c.first_user + c.users; ++u)
    out.push_back({session_file_name(u), serialize_session(synth_user(c, u, seed))});
  return out;
}

// ---------------------------------------------------------------------------
// attack

/// Comma-separated policy names: foreground-only-hover, filter-touches,
/// min-view-px=N, forbid-watch-outside, none.
inline void apply_policy(DispatchPolicy& p, std::string_view list) {
  while (!list.empty()) {
    const auto comma = list.find(',');
    const std::string_view item = trim(list.substr(0, comma));
    list = comma == std::string_view::npos ? std::string_view{} : list.substr(comma + 1);
    if (item == "foreground-only-hover") {
      p.foreground_only_hover = true;
    } else if (item == "filter-touches") {
      p.filter_touches_when_obscured = true;
    } else if (item == "forbid-watch-outside") {
      p.forbid_watch_outside = true;
    } else if (item.substr(0, 12) == "min-view-px=") {
      const std::string_view n = item.substr(12);
      const auto [ptr, ec] = std::from_chars(n.data(), n.data() + n.size(), p.min_view_px);
      if (ec != std::errc() || ptr != n.data() + n.size() || p.min_view_px < 0)
        throw UsageError("min-view-px needs a non-negative integer");
    } else if (item != "none" && !item.empty()) {
      throw UsageError("unknown policy '" + std::string(item) + "'");
    }
  }
}

inline AttackerConfig attacker_config(const ConfigMap& cfg) {
  detail::reject_unknown_keys(cfg, {"activation_ms", "max_hovers", "reaction_latency_us", "window_anchor",
                                    "fallback_listener", "retire_when_full"});
  AttackerConfig a;
  if (auto it = cfg.find("activation_ms"); it != cfg.end()) a.activation_ms = config_number("activation_ms", it->second);
  a.max_hovers = detail::config_int(cfg, "max_hovers", a.max_hovers);
  a.reaction_latency_us = detail::config_int(cfg, "reaction_latency_us", a.reaction_latency_us);
  a.fallback_listener = detail::config_bool(cfg, "fallback_listener", a.fallback_listener);
  a.retire_when_full = detail::config_bool(cfg, "retire_when_full", a.retire_when_full);
  if (auto it = cfg.find("window_anchor"); it != cfg.end()) {
    if (it->second == "down") a.window_anchor = WindowAnchor::TouchDown;
    else if (it->second == "up") a.window_anchor = WindowAnchor::TouchUp;
    else throw UsageError("window_anchor must be down or up");
  }
  if (!a.valid() || a.max_hovers > static_cast<int>(kCaptureHoverSlots))
    throw UsageError("attacker config out of range (max_hovers is at most 4)");
  return a;
}

inline std::string capture_file_name(int user_id) { return "captures_" + std::to_string(user_id) + ".bin"; }

inline nlohmann::ordered_json audit_json(const StealthAudit& a) {
  return {{"obstructed_clicks", a.obstructed_clicks},
          {"touches_to_overlay", a.touches_to_overlay},
          {"illegal_commands", a.illegal_commands}};
}

inline Outputs run_attacks(std::span<const Session> sessions, const AttackerConfig& cfg, const DispatchPolicy& policy) {
  Outputs out;
  std::set<int> seen;
  StealthAudit total;
  std::size_t total_clicks = 0, total_captures = 0, total_hovers = 0;
  nlohmann::ordered_json per_session = nlohmann::ordered_json::array();
  for (const Session& s : sessions) {
    if (!seen.insert(s.user_id).second) throw DataError("two sessions share user_id " + std::to_string(s.user_id));
    const AttackResult r = run_attack(s, cfg, policy);
    std::size_t hovers = 0;
    for (const CapturedClick& c : r.captures) hovers += c.hovers.size();
    out.push_back({capture_file_name(s.user_id), encode_capture_stream(r.captures)});

    auto j = audit_json(r.audit);
    j["user_id"] = s.user_id;
    j["clicks"] = s.truth_clicks.size();
    j["captures"] = r.captures.size();
    j["hovers"] = hovers;
    per_session.push_back(j);

    total.obstructed_clicks += r.audit.obstructed_clicks;
    total.touches_to_overlay += r.audit.touches_to_overlay;
    total.illegal_commands += r.audit.illegal_commands;
    total_clicks += s.truth_clicks.size();
    total_captures += r.captures.size();
    total_hovers += hovers;
  }
  auto t = audit_json(total);
  t["clicks"] = total_clicks;
  t["captures"] = total_captures;
  t["hovers"] = total_hovers;
  nlohmann::ordered_json doc = {{"total", t}, {"sessions", per_session}};
  out.push_back({"audit.json", doc.dump(2) + "\n"});
  return out;
}

// ---------------------------------------------------------------------------
// shared input handling

inline Session parse_session_bytes(const std::string& name, std::string_view bytes) {
  try {
    Session s = parse_session(bytes);
    if (const auto v = validate_session(s); !v.empty())
      throw DataError(name + ": invalid session (" + std::string(to_string(v.front().kind)) + " at " +
                      std::to_string(v.front().index) + ")");
    return s;
  } catch (const ParseError& e) {
    throw DataError(name + ": " + e.what());
  }
}

inline std::vector<CapturedClick> parse_captures_bytes(const std::string& name, std::string_view bytes) {
  try {
    return decode_capture_stream(bytes);
  } catch (const DecodeError& e) {
    throw DataError(name + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// eval

struct CvSpec {
  bool loocv = false;
  std::size_t folds = 10;
};

inline CvSpec parse_cv(std::string_view s) {
  if (s == "loocv") return {true, 0};
  if (s.substr(0, 6) == "kfold:") {
    std::size_t k = 0;
    const std::string_view n = s.substr(6);
    const auto [p, ec] = std::from_chars(n.data(), n.data() + n.size(), k);
    if (ec == std::errc() && p == n.data() + n.size() && k >= 2) return {false, k};
  }
  if (s == "kfold") return {false, 10};
  throw UsageError("--cv must be loocv or kfold:K with K >= 2");
}

inline std::string to_string(const CvSpec& cv) { return cv.loocv ? "loocv" : "kfold:" + std::to_string(cv.folds); }

struct EvalOptions {
  learn::Task task = learn::Task::Regression;
  std::vector<std::string> models;  // spec strings, see learn::parse_model_spec
  CvSpec cv;
  learn::FeatureOptions features;
  std::uint64_t seed = 0;
  std::string corpus;
  bool save_models = false;
};

struct EvalResult {
  std::vector<learn::MetricsRow> rows;
  std::size_t dropped_empty = 0;
  std::size_t dropped_unlabeled = 0;
  Outputs files;
};

inline EvalResult run_eval(std::span<const CapturedClick> captures, std::span<const Session> sessions,
                           const EvalOptions& opt) {
  using namespace learn;
  if (opt.features.k < 1 || opt.features.k > static_cast<int>(kCaptureHoverSlots))
    throw UsageError("--k-hovers must be between 1 and 4");
  if (sessions.empty()) throw DataError("no truth sessions");
  for (const Session& s : sessions)
    if (!(s.screen == sessions.front().screen)) throw DataError("truth sessions use different screens");

  std::vector<std::string> names = opt.models;
  for (const std::string& m : names) {
    try {
      parse_model_spec(m, opt.task);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  const bool has_baseline = std::any_of(names.begin(), names.end(), [&](const std::string& m) {
    const ModelKind k = parse_model_spec(m, opt.task).kind;
    return k == ModelKind::BaselineReg || k == ModelKind::BaselineCls;
  });
  if (!has_baseline) names.insert(names.begin(), "baseline");

  std::vector<ModelSpec> specs;
  for (const std::string& n : names) {
    ModelSpec s;
    try {
      s = parse_model_spec(n, opt.task);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (n.find("seed=") == std::string::npos) s.seed = opt.seed;
    if (s.kind == ModelKind::BaselineCls) s.layout = make_layout(sessions.front().screen);
    specs.push_back(std::move(s));
  }

  std::vector<JoinedClick> joined;
  try {
    joined = join_captures(captures, sessions);
  } catch (const JoinError& e) {
    throw DataError(e.what());
  }

  EvalResult r;
  BuildStats stats;
  const std::string cv_name = to_string(opt.cv);
  auto guard = [](auto fn) {
    try {
      return fn();
    } catch (const std::invalid_argument& e) {
      throw DataError(e.what());
    }
  };
  if (opt.task == Task::Regression) {
    const RegressionSet data = regression_set(joined, opt.features, &stats);
    for (std::size_t i = 0; i < specs.size(); ++i) {
      Metrics m = guard([&] {
        return opt.cv.loocv ? loocv_rmse(data, specs[i]) : kfold_rmse(data, specs[i], opt.cv.folds, opt.seed);
      });
      r.rows.push_back({opt.corpus, names[i], cv_name, std::move(m)});
      if (opt.save_models)
        r.files.push_back({"model_" + std::to_string(i) + ".json", model_to_json(guard([&] { return fit(specs[i], data); }))});
    }
  } else {
    const ClassificationSet data = classification_set(joined, opt.features, &stats);
    for (std::size_t i = 0; i < specs.size(); ++i) {
      Metrics m = guard([&] { return kfold_accuracy(data, specs[i], opt.cv.loocv ? data.size() : opt.cv.folds, opt.seed); });
      r.rows.push_back({opt.corpus, names[i], cv_name, std::move(m)});
      if (opt.save_models)
        r.files.push_back({"model_" + std::to_string(i) + ".json", model_to_json(guard([&] { return fit(specs[i], data); }))});
    }
  }
  r.dropped_empty = stats.dropped_empty;
  r.dropped_unlabeled = stats.dropped_unlabeled;
  r.files.insert(r.files.begin(), {"metrics.csv", metrics_csv(r.rows)});
  return r;
}

// ---------------------------------------------------------------------------
// detect / biometrics

struct CaptureStream {
  std::vector<CapturedClick> captures;
  const Session* truth = nullptr;
};

// Maps segments over capture positions to the truth click indices they cover.
inline std::vector<ClickInterval> segments_to_clicks(std::span<const CapturedClick> captures,
                                                     std::span<const Segment> segments) {
  std::vector<ClickInterval> out;
  for (const auto& [b, e] : segments) {
    if (b >= e) continue;
    out.push_back({static_cast<std::size_t>(captures[b].click_index),
                   static_cast<std::size_t>(captures[e - 1].click_index) + 1});
  }
  return out;
}

/// Pools every stream into one click index space and scores both heuristics.
inline std::pair<DetectionReport, DetectionReport> detect_all(std::span<const CaptureStream> streams) {
  std::vector<ClickInterval> simple, refined, truth;
  std::size_t offset = 0;
  for (const CaptureStream& s : streams) {
    const KeyboardLayout layout = make_layout(s.truth->screen);
    auto shift = [offset](std::vector<ClickInterval> v, std::vector<ClickInterval>& into) {
      for (auto& [b, e] : v) into.push_back({b + offset, e + offset});
    };
    for (std::size_t i = 0; i < s.captures.size(); ++i) {
      const auto idx = static_cast<std::size_t>(s.captures[i].click_index);
      if (idx >= s.truth->truth_clicks.size() || (i > 0 && s.captures[i - 1].click_index >= s.captures[i].click_index))
        throw DataError("captures do not line up with the truth clicks of user " + std::to_string(s.truth->user_id));
    }
    shift(segments_to_clicks(s.captures, detect_keyboard(s.captures, heuristic_config(layout, false))), simple);
    shift(segments_to_clicks(s.captures, detect_keyboard(s.captures, heuristic_config(layout, true))), refined);
    shift(labeled_runs(*s.truth), truth);
    offset += s.truth->truth_clicks.size();
  }
  return {score_detection(simple, truth, offset), score_detection(refined, truth, offset)};
}

inline std::string detection_csv(const DetectionReport& simple, const DetectionReport& refined) {
  return std::string(kDetectionCsvHeader) + detection_csv_row("simple", simple) + detection_csv_row("refined", refined);
}

}  // namespace hoover::pipeline
