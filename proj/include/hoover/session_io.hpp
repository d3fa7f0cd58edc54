#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "hoover/events.hpp"

namespace hoover {

// Malformed session input; `offset` is the byte position in the stream.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : std::runtime_error("byte " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

namespace detail {

inline nlohmann::ordered_json event_json(const InputEvent& e) {
  nlohmann::ordered_json j;
  j["t_us"] = e.t_us;
  j["kind"] = wire_name(e.kind);
  j["x"] = e.x;
  j["y"] = e.y;
  return j;
}

inline nlohmann::ordered_json click_json(const Click& c) {
  nlohmann::ordered_json inner;
  inner["t_down_us"] = c.t_down_us;
  inner["t_up_us"] = c.t_up_us;
  inner["x"] = c.x;
  inner["y"] = c.y;
  inner["key"] = c.key_label ? nlohmann::ordered_json(*c.key_label) : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json j;
  j["click"] = std::move(inner);
  return j;
}

template <class J>
const J& require(const J& obj, const char* key, std::size_t offset) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(offset, std::string("missing field '") + key + "'");
  return *it;
}

template <class J>
std::int64_t require_int(const J& obj, const char* key, std::size_t offset) {
  const J& v = require(obj, key, offset);
  if (!v.is_number_integer()) throw ParseError(offset, std::string("field '") + key + "' must be an integer");
  return v.template get<std::int64_t>();
}

template <class J>
double require_num(const J& obj, const char* key, std::size_t offset) {
  const J& v = require(obj, key, offset);
  if (!v.is_number()) throw ParseError(offset, std::string("field '") + key + "' must be a number");
  return v.template get<double>();
}

}  // namespace detail

/// Session as UTF-8 JSON Lines: a header object, then one object per event.
/// Each click record is written directly after the touch-up that ends it.
inline std::string serialize_session(const Session& s) {
  std::string out;
  nlohmann::ordered_json h;
  h["version"] = 1;
  h["width_px"] = s.screen.width_px;
  h["height_px"] = s.screen.height_px;
  h["hover_range_mm"] = s.screen.hover_range_mm;
  h["method"] = to_string(s.method);
  h["user_id"] = s.user_id;
  h["seed"] = s.seed;
  out += h.dump();
  out += '\n';

  std::vector<bool> written(s.truth_clicks.size(), false);
  for (const InputEvent& e : s.events) {
    out += detail::event_json(e).dump();
    out += '\n';
    if (e.kind != EventKind::TouchUp) continue;
    for (std::size_t c = 0; c < s.truth_clicks.size(); ++c) {
      if (!written[c] && s.truth_clicks[c].t_up_us == e.t_us) {
        out += detail::click_json(s.truth_clicks[c]).dump();
        out += '\n';
        written[c] = true;
      }
    }
  }
  for (std::size_t c = 0; c < s.truth_clicks.size(); ++c) {
    if (written[c]) continue;
    out += detail::click_json(s.truth_clicks[c]).dump();
    out += '\n';
  }
  return out;
}

inline Session parse_session(std::string_view bytes) {
  Session s;
  bool have_header = false;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) throw ParseError(bytes.size(), "truncated record (no line terminator)");
    const std::string_view line = bytes.substr(pos, nl - pos);
    const std::size_t offset = pos;
    pos = nl + 1;
    if (line.empty()) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
      throw ParseError(offset + std::min(at, line.size()), "malformed JSON");
    }
    if (!j.is_object()) throw ParseError(offset, "record must be a JSON object");

    if (!have_header) {
      if (detail::require_int(j, "version", offset) != 1) throw ParseError(offset, "unsupported version");
      s.screen.width_px = static_cast<int>(detail::require_int(j, "width_px", offset));
      s.screen.height_px = static_cast<int>(detail::require_int(j, "height_px", offset));
      s.screen.hover_range_mm = detail::require_num(j, "hover_range_mm", offset);
      const auto& m = detail::require(j, "method", offset);
      if (!m.is_string()) throw ParseError(offset, "field 'method' must be a string");
      try {
        s.method = parse_method(m.get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw ParseError(offset, e.what());
      }
      s.user_id = static_cast<int>(detail::require_int(j, "user_id", offset));
      const auto& seed = detail::require(j, "seed", offset);
      if (!seed.is_number_integer()) throw ParseError(offset, "field 'seed' must be an integer");
      s.seed = seed.get<std::uint64_t>();
      if (!s.screen.valid()) throw ParseError(offset, "invalid screen dimensions");
      have_header = true;
      continue;
    }

    if (auto it = j.find("click"); it != j.end()) {
      const auto& c = *it;
      if (!c.is_object()) throw ParseError(offset, "field 'click' must be an object");
      Click k;
      k.t_down_us = detail::require_int(c, "t_down_us", offset);
      k.t_up_us = detail::require_int(c, "t_up_us", offset);
      k.x = detail::require_num(c, "x", offset);
      k.y = detail::require_num(c, "y", offset);
      const auto& key = detail::require(c, "key", offset);
      if (key.is_string()) {
        k.key_label = key.get<std::string>();
      } else if (!key.is_null()) {
        throw ParseError(offset, "field 'key' must be a string or null");
      }
      s.truth_clicks.push_back(std::move(k));
      continue;
    }

    InputEvent e;
    e.t_us = detail::require_int(j, "t_us", offset);
    const auto& kind = detail::require(j, "kind", offset);
    if (!kind.is_string()) throw ParseError(offset, "field 'kind' must be a string");
    const auto k = parse_event_kind(kind.get<std::string>());
    if (!k) throw ParseError(offset, "unknown event kind '" + kind.get<std::string>() + "'");
    e.kind = *k;
    e.x = detail::require_num(j, "x", offset);
    e.y = detail::require_num(j, "y", offset);
    s.events.push_back(e);
  }
  if (!have_header) throw ParseError(bytes.size(), "missing header record");

  std::stable_sort(s.events.begin(), s.events.end(),
                   [](const InputEvent& a, const InputEvent& b) { return a.t_us < b.t_us; });
  std::stable_sort(s.truth_clicks.begin(), s.truth_clicks.end(),
                   [](const Click& a, const Click& b) { return a.t_down_us < b.t_down_us; });
  return s;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline Session load_session(const std::string& path) { return parse_session(read_file(path)); }

}  // namespace hoover
