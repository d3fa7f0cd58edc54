#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hoover/events.hpp"
#include "hoover/geometry.hpp"
#include "hoover/rng.hpp"

namespace hoover {

struct TrajectoryProfile {
  double sample_mean_ms = 19.0;
  double sample_jitter_ms = 4.0;
  double path_noise_px = 3.0;
  Point offset_bias_px{0.0, 0.0};
  double direction_gain_px = 0.0;
  double click_duration_median_ms = 60.0;
  double interclick_median_ms = 400.0;
  double interclick_sigma_log = 0.45;

  bool valid() const {
    return sample_mean_ms > 0.0 && sample_jitter_ms >= 0.0 && path_noise_px >= 0.0 &&
           click_duration_median_ms > 0.0 && interclick_median_ms > 0.0 && interclick_sigma_log >= 0.0;
  }

  friend bool operator==(const TrajectoryProfile&, const TrajectoryProfile&) = default;
};

inline constexpr double kFingerBiasSigmaPx = 30.0;

/// Stylus: tight hovers along the path. Finger: wide scatter, a per-user
/// sensed-centroid bias and a displacement along the movement direction.
inline TrajectoryProfile default_profile(InputMethod method, int user_id = 0) {
  TrajectoryProfile p;
  if (method == InputMethod::Finger) {
    p.path_noise_px = 40.0;
    p.direction_gain_px = 60.0;
    Rng rng(derive_seed(static_cast<std::uint64_t>(user_id), 0xb1a5));
    p.offset_bias_px.x = rng.normal(0.0, kFingerBiasSigmaPx);
    p.offset_bias_px.y = rng.normal(0.0, kFingerBiasSigmaPx);
  }
  return p;
}

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ConfigMap = std::map<std::string, std::string>;

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Flat `key = value` lines; '#' and ';' start comments, [section] headers are ignored.
inline ConfigMap parse_config(std::string_view text) {
  ConfigMap out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    out[key] = value;
  }
  return out;
}

inline double config_number(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError("config key '" + key + "': not a number: '" + value + "'");
  return v;
}

// Applies any TrajectoryProfile keys present in `cfg`; other keys are left alone.
inline void apply_profile_overrides(TrajectoryProfile& p, const ConfigMap& cfg) {
  auto set = [&](const char* key, double& field) {
    if (auto it = cfg.find(key); it != cfg.end()) field = config_number(key, it->second);
  };
  set("sample_mean_ms", p.sample_mean_ms);
  set("sample_jitter_ms", p.sample_jitter_ms);
  set("path_noise_px", p.path_noise_px);
  set("direction_gain_px", p.direction_gain_px);
  set("click_duration_median_ms", p.click_duration_median_ms);
  set("interclick_median_ms", p.interclick_median_ms);
  set("interclick_sigma_log", p.interclick_sigma_log);
  if (auto it = cfg.find("offset_bias_px"); it != cfg.end()) {
    const auto comma = it->second.find(',');
    if (comma == std::string::npos) throw ConfigError("config key 'offset_bias_px': expected 'x,y'");
    p.offset_bias_px.x = config_number("offset_bias_px", std::string(trim(std::string_view(it->second).substr(0, comma))));
    p.offset_bias_px.y = config_number("offset_bias_px", std::string(trim(std::string_view(it->second).substr(comma + 1))));
  }
  if (!p.valid()) throw ConfigError("trajectory profile out of range");
}

}  // namespace hoover
