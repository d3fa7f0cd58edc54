#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hoover/capture.hpp"
#include "hoover/layout.hpp"
#include "hoover/synth.hpp"

namespace hoover {

struct HeuristicConfig {
  Rect keyboard_region;
  int min_seq_len = 4;
  std::int64_t first_key_delay_ms = 500;
  bool refined = false;

  bool valid() const { return min_seq_len >= 1 && first_key_delay_ms >= 0; }
};

inline HeuristicConfig heuristic_config(const KeyboardLayout& layout, bool refined) {
  HeuristicConfig c;
  c.keyboard_region = layout.region;
  c.refined = refined;
  return c;
}

// Capture-list index range [begin, end).
using Segment = ClickInterval;

/// Simple mode returns maximal runs of clicks whose first post-click hover
/// falls in the keyboard region. Refined mode keeps only runs of at least
/// min_seq_len clicks whose first click comes first_key_delay_ms or more
/// (touch down to touch down) after the click before it. A run that opens
/// the stream has no predecessor and passes the delay test.
inline std::vector<Segment> detect_keyboard(std::span<const CapturedClick> captures, const HeuristicConfig& cfg) {
  if (!cfg.valid()) throw std::invalid_argument("invalid heuristic config");
  auto on_keyboard = [&](const CapturedClick& c) {
    return !c.hovers.empty() && cfg.keyboard_region.contains({c.hovers.front().x, c.hovers.front().y});
  };
  std::vector<Segment> out;
  for (std::size_t i = 0; i < captures.size();) {
    if (!on_keyboard(captures[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < captures.size() && on_keyboard(captures[j])) ++j;
    bool keep = true;
    if (cfg.refined) {
      keep = j - i >= static_cast<std::size_t>(cfg.min_seq_len);
      if (keep && i > 0) keep = captures[i].t_down_ms - captures[i - 1].t_down_ms >= cfg.first_key_delay_ms;
    }
    if (keep) out.push_back({i, j});
    i = j;
  }
  return out;
}

struct DetectionReport {
  std::vector<Segment> segments;
  std::size_t n_clicks = 0;
  std::size_t typing_clicks = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double false_positive_rate = 0.0;  // 0 when the workload has no non-typing clicks
  double false_negative_rate = 0.0;  // 0 when the workload has no typing clicks
};

/// Click-level scoring of predicted segments against true typing intervals,
/// both expressed as index ranges over the same n_clicks clicks.
inline DetectionReport score_detection(std::span<const Segment> segments, std::span<const ClickInterval> truth,
                                       std::size_t n_clicks) {
  auto mark = [n_clicks](std::span<const ClickInterval> ranges) {
    std::vector<char> m(n_clicks, 0);
    for (const auto& [b, e] : ranges) {
      if (b > e || e > n_clicks) throw std::out_of_range("interval outside the click range");
      std::fill(m.begin() + std::ptrdiff_t(b), m.begin() + std::ptrdiff_t(e), 1);
    }
    return m;
  };
  const auto predicted = mark(segments), typing = mark(truth);
  DetectionReport r;
  r.segments.assign(segments.begin(), segments.end());
  r.n_clicks = n_clicks;
  for (std::size_t i = 0; i < n_clicks; ++i) {
    r.typing_clicks += typing[i];
    if (predicted[i] && !typing[i]) ++r.false_positives;
    if (!predicted[i] && typing[i]) ++r.false_negatives;
  }
  const std::size_t other = n_clicks - r.typing_clicks;
  r.false_positive_rate = other ? double(r.false_positives) / double(other) : 0.0;
  r.false_negative_rate = r.typing_clicks ? double(r.false_negatives) / double(r.typing_clicks) : 0.0;
  return r;
}

// Pairwise fields describe the gap to the next click and are empty on the last one.
struct BiometricRecord {
  int user_id = 0;
  int click_index = 0;
  std::int64_t click_duration_ms = 0;
  std::optional<std::int64_t> inter_click_ms;  // down to next down
  std::optional<std::int64_t> hover_gap_ms;    // up to next down

  friend bool operator==(const BiometricRecord&, const BiometricRecord&) = default;
};

inline std::vector<BiometricRecord> biometrics(std::span<const CapturedClick> captures) {
  if (captures.empty()) throw std::invalid_argument("biometrics needs at least one click");
  std::vector<BiometricRecord> out;
  out.reserve(captures.size());
  for (std::size_t i = 0; i < captures.size(); ++i) {
    const CapturedClick& c = captures[i];
    BiometricRecord r{c.user_id, c.click_index, c.dt_up_ms, std::nullopt, std::nullopt};
    if (i + 1 < captures.size()) {
      const CapturedClick& next = captures[i + 1];
      if (next.t_down_ms < c.t_down_ms + c.dt_up_ms) throw std::invalid_argument("captures are not time-ordered");
      r.inter_click_ms = next.t_down_ms - c.t_down_ms;
      r.hover_gap_ms = next.t_down_ms - (c.t_down_ms + c.dt_up_ms);
    }
    out.push_back(r);
  }
  return out;
}

inline std::string reconstruct_text(std::span<const std::string> keys) {
  std::string out;
  for (const std::string& k : keys) out += k == kSpaceLabel ? std::string(" ") : k;
  return out;
}

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline constexpr std::string_view kDetectionCsvHeader =
    "mode,n_clicks,typing_clicks,segments,false_positives,false_negatives,false_positive_rate,false_negative_rate\n";

inline std::string detection_csv_row(std::string_view mode, const DetectionReport& r) {
  char rates[64];
  std::snprintf(rates, sizeof rates, "%.6f,%.6f", r.false_positive_rate, r.false_negative_rate);
  return std::string(mode) + ',' + std::to_string(r.n_clicks) + ',' + std::to_string(r.typing_clicks) + ',' +
         std::to_string(r.segments.size()) + ',' + std::to_string(r.false_positives) + ',' +
         std::to_string(r.false_negatives) + ',' + rates + '\n';
}

inline constexpr std::string_view kBiometricsCsvHeader =
    "user_id,click_index,click_duration_ms,inter_click_ms,hover_gap_ms\n";

inline std::string biometrics_csv(std::span<const BiometricRecord> records) {
  std::string out(kBiometricsCsvHeader);
  auto opt = [](const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) : std::string(); };
  for (const BiometricRecord& r : records)
    out += std::to_string(r.user_id) + ',' + std::to_string(r.click_index) + ',' + std::to_string(r.click_duration_ms) +
           ',' + opt(r.inter_click_ms) + ',' + opt(r.hover_gap_ms) + '\n';
  return out;
}

}  // namespace hoover
