#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hoover/events.hpp"

namespace hoover {

struct HoverSample {
  double dt_ms = 0.0;  // since the click's touch down
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const HoverSample&, const HoverSample&) = default;
};

/// What the attacker learns about one click: touch timestamps from the
/// listener and the post-click hovers caught by the overlay.
struct CapturedClick {
  int user_id = 0;
  int click_index = 0;
  std::int64_t t_down_ms = 0;
  std::int64_t dt_up_ms = 0;
  std::vector<HoverSample> hovers;
  InputMethod method = InputMethod::Stylus;

  friend bool operator==(const CapturedClick&, const CapturedClick&) = default;
};

inline constexpr std::size_t kCaptureRecordSize = 40;
inline constexpr std::size_t kCaptureHoverSlots = 4;
inline constexpr std::uint16_t kEmptySlotDt = 0xFFFF;

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
inline std::uint16_t crc16_ccitt(std::span<const std::uint8_t> data) {
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t b : data) {
    crc ^= static_cast<std::uint16_t>(b) << 8;
    for (int i = 0; i < 8; ++i) crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021) : static_cast<std::uint16_t>(crc << 1);
  }
  return crc;
}

inline double round_half_up(double v) { return std::floor(v + 0.5); }

// The record as it survives the wire: hover fields rounded to whole units.
inline CapturedClick round_capture(CapturedClick c) {
  for (HoverSample& h : c.hovers) {
    h.dt_ms = round_half_up(h.dt_ms);
    h.x = round_half_up(h.x);
    h.y = round_half_up(h.y);
  }
  return c;
}

using CaptureRecord = std::array<std::uint8_t, kCaptureRecordSize>;

namespace detail {

template <class T>
T checked(std::int64_t v, std::int64_t max, const char* field) {
  if (v < 0 || v > max) throw std::out_of_range(std::string("capture field '") + field + "' out of range");
  return static_cast<T>(v);
}

inline void put16(CaptureRecord& b, std::size_t at, std::uint16_t v) {
  b[at] = static_cast<std::uint8_t>(v & 0xFF);
  b[at + 1] = static_cast<std::uint8_t>(v >> 8);
}

inline void put32(CaptureRecord& b, std::size_t at, std::uint32_t v) {
  for (std::size_t i = 0; i < 4; ++i) b[at + i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF);
}

inline std::uint16_t get16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

inline std::uint32_t get32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

}  // namespace detail

/// Little-endian layout:
///   0 user_id u16 | 2 click_index u16 | 4 t_down_ms u32 | 8 dt_up_ms u16
///  10 four hover slots of (dt_ms u16, x u16, y u16), unused dt = 0xFFFF
///  34 n_hovers u8 | 35 method u8 | 36 reserved u16 = 0 | 38 crc16 over bytes 0..37
inline CaptureRecord encode_captured(const CapturedClick& c) {
  using detail::checked;
  if (c.hovers.size() > kCaptureHoverSlots) throw std::out_of_range("capture holds more than 4 hovers");
  CaptureRecord b{};
  detail::put16(b, 0, checked<std::uint16_t>(c.user_id, 0xFFFF, "user_id"));
  detail::put16(b, 2, checked<std::uint16_t>(c.click_index, 0xFFFF, "click_index"));
  detail::put32(b, 4, checked<std::uint32_t>(c.t_down_ms, 0xFFFFFFFFLL, "t_down_ms"));
  detail::put16(b, 8, checked<std::uint16_t>(c.dt_up_ms, 0xFFFF, "dt_up_ms"));
  for (std::size_t i = 0; i < kCaptureHoverSlots; ++i) {
    const std::size_t at = 10 + 6 * i;
    if (i < c.hovers.size()) {
      const HoverSample& h = c.hovers[i];
      detail::put16(b, at, checked<std::uint16_t>(std::int64_t(round_half_up(h.dt_ms)), 0xFFFE, "hover dt_ms"));
      detail::put16(b, at + 2, checked<std::uint16_t>(std::int64_t(round_half_up(h.x)), 0xFFFF, "hover x"));
      detail::put16(b, at + 4, checked<std::uint16_t>(std::int64_t(round_half_up(h.y)), 0xFFFF, "hover y"));
    } else {
      detail::put16(b, at, kEmptySlotDt);
    }
  }
  b[34] = static_cast<std::uint8_t>(c.hovers.size());
  b[35] = static_cast<std::uint8_t>(c.method);
  detail::put16(b, 36, 0);
  detail::put16(b, 38, crc16_ccitt(std::span<const std::uint8_t>(b.data(), 38)));
  return b;
}

inline CapturedClick decode_captured(std::span<const std::uint8_t> b) {
  if (b.size() != kCaptureRecordSize)
    throw DecodeError("capture record must be 40 bytes, got " + std::to_string(b.size()));
  if (crc16_ccitt(b.first(38)) != detail::get16(b, 38)) throw DecodeError("capture record CRC mismatch");
  if (detail::get16(b, 36) != 0) throw DecodeError("capture record reserved field is not zero");
  const std::size_t n = b[34];
  if (n > kCaptureHoverSlots) throw DecodeError("capture record claims more than 4 hovers");
  if (b[35] > 1) throw DecodeError("capture record has unknown input method");

  CapturedClick c;
  c.user_id = detail::get16(b, 0);
  c.click_index = detail::get16(b, 2);
  c.t_down_ms = detail::get32(b, 4);
  c.dt_up_ms = detail::get16(b, 8);
  for (std::size_t i = 0; i < kCaptureHoverSlots; ++i) {
    const std::size_t at = 10 + 6 * i;
    const std::uint16_t dt = detail::get16(b, at);
    if (i < n) {
      if (dt == kEmptySlotDt) throw DecodeError("capture record has an empty slot inside the hover count");
      c.hovers.push_back({double(dt), double(detail::get16(b, at + 2)), double(detail::get16(b, at + 4))});
    } else if (dt != kEmptySlotDt || detail::get16(b, at + 2) != 0 || detail::get16(b, at + 4) != 0) {
      throw DecodeError("capture record has data in an unused hover slot");
    }
  }
  c.method = static_cast<InputMethod>(b[35]);
  return c;
}

// Capture file: concatenated records, no header.
inline std::string encode_capture_stream(std::span<const CapturedClick> captures) {
  std::string out;
  out.reserve(captures.size() * kCaptureRecordSize);
  for (const CapturedClick& c : captures) {
    const CaptureRecord r = encode_captured(c);
    out.append(reinterpret_cast<const char*>(r.data()), r.size());
  }
  return out;
}

inline std::vector<CapturedClick> decode_capture_stream(std::string_view bytes) {
  if (bytes.size() % kCaptureRecordSize != 0)
    throw DecodeError("capture stream length " + std::to_string(bytes.size()) + " is not a multiple of 40");
  std::vector<CapturedClick> out;
  const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data());
  for (std::size_t off = 0; off < bytes.size(); off += kCaptureRecordSize) {
    try {
      out.push_back(decode_captured(std::span<const std::uint8_t>(p + off, kCaptureRecordSize)));
    } catch (const DecodeError& e) {
      throw DecodeError("record " + std::to_string(off / kCaptureRecordSize) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace hoover
