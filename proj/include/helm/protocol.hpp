#pragma once

// helm-link: framed binary telemetry/command protocol.
//
//   0xFA | len u8 | seq u8 | id u8 | payload[len] | crc u16 LE
//
// crc is CRC-16/CCITT-FALSE over len, seq, id and payload. Byte layouts of
// every message are in protocol.md.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "helm/angles.hpp"
#include "helm/errors.hpp"
#include "helm/perception.hpp"

namespace helm::proto {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint8_t kMagic = 0xFA;
inline constexpr std::size_t kHeaderSize = 4;  // magic, len, seq, id
inline constexpr std::size_t kOverhead = 6;
inline constexpr std::size_t kMaxPayload = 250;
inline constexpr std::size_t kParserBuffer = 4096;

inline std::uint16_t crc16(std::span<const std::uint8_t> data,
                           std::uint16_t crc = 0xFFFF) {
  for (std::uint8_t byte : data) {
    crc ^= static_cast<std::uint16_t>(byte) << 8;
    for (int bit = 0; bit < 8; ++bit)
      crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                           : static_cast<std::uint16_t>(crc << 1);
  }
  return crc;
}

enum class MsgId : std::uint8_t {
  Heartbeat = 0x00,
  State = 0x01,
  Obstacle = 0x02,
  SetThrust = 0x10,
  SetVelHead = 0x11,
  SetWaypoint = 0x12,
  SetMode = 0x13,
  Arm = 0x14,
  Ack = 0x7F,
};

enum class AckResult : std::uint8_t { Ok = 0, Rejected = 1, Invalid = 2 };

struct Heartbeat {
  static constexpr MsgId id = MsgId::Heartbeat;
  static constexpr std::size_t size = 3;
  std::uint8_t mode = 0;
  std::uint8_t armed = 0;
  std::uint8_t health = 0;
  bool operator==(const Heartbeat&) const = default;
};

struct State {
  static constexpr MsgId id = MsgId::State;
  static constexpr std::size_t size = 24;
  std::uint32_t t_ms = 0;
  std::int32_t x_mm = 0;
  std::int32_t y_mm = 0;
  std::uint16_t psi_cdeg = 0;  // 0..35999
  std::int16_t u_mms = 0;
  std::int16_t v_mms = 0;
  std::int16_t r_cdps = 0;
  std::int16_t thr_l_permille = 0;
  std::int16_t thr_r_permille = 0;
  bool operator==(const State&) const = default;
};

struct Obstacle {
  static constexpr MsgId id = MsgId::Obstacle;
  static constexpr std::size_t size = 4 + 2 * perception::kSectorCount;
  std::uint32_t t_ms = 0;
  std::array<std::uint16_t, perception::kSectorCount> distances_cm{};
  bool operator==(const Obstacle&) const = default;
};

struct SetThrust {
  static constexpr MsgId id = MsgId::SetThrust;
  static constexpr std::size_t size = 4;
  std::int16_t left_permille = 0;
  std::int16_t right_permille = 0;
  bool operator==(const SetThrust&) const = default;
};

struct SetVelHead {
  static constexpr MsgId id = MsgId::SetVelHead;
  static constexpr std::size_t size = 4;
  std::uint16_t speed_mms = 0;
  std::uint16_t heading_cdeg = 0;
  bool operator==(const SetVelHead&) const = default;
};

struct SetWaypoint {
  static constexpr MsgId id = MsgId::SetWaypoint;
  static constexpr std::size_t size = 10;
  std::int32_t x_mm = 0;
  std::int32_t y_mm = 0;
  std::uint16_t accept_radius_cm = 200;
  bool operator==(const SetWaypoint&) const = default;
};

struct SetMode {
  static constexpr MsgId id = MsgId::SetMode;
  static constexpr std::size_t size = 1;
  std::uint8_t mode = 0;
  bool operator==(const SetMode&) const = default;
};

struct Arm {
  static constexpr MsgId id = MsgId::Arm;
  static constexpr std::size_t size = 1;
  std::uint8_t flag = 0;
  bool operator==(const Arm&) const = default;
};

struct Ack {
  static constexpr MsgId id = MsgId::Ack;
  static constexpr std::size_t size = 2;
  std::uint8_t acked_id = 0;
  std::uint8_t result = 0;
  bool operator==(const Ack&) const = default;
};

/// Any id this build does not know; carried through untouched.
struct Opaque {
  std::uint8_t id = 0;
  Bytes payload;
  bool operator==(const Opaque&) const = default;
};

using Message = std::variant<Heartbeat, State, Obstacle, SetThrust, SetVelHead,
                             SetWaypoint, SetMode, Arm, Ack, Opaque>;

/// Fixed payload length for a known id.
inline std::optional<std::size_t> fixed_length(std::uint8_t id) {
  switch (static_cast<MsgId>(id)) {
    case MsgId::Heartbeat: return Heartbeat::size;
    case MsgId::State: return State::size;
    case MsgId::Obstacle: return Obstacle::size;
    case MsgId::SetThrust: return SetThrust::size;
    case MsgId::SetVelHead: return SetVelHead::size;
    case MsgId::SetWaypoint: return SetWaypoint::size;
    case MsgId::SetMode: return SetMode::size;
    case MsgId::Arm: return Arm::size;
    case MsgId::Ack: return Ack::size;
  }
  return std::nullopt;
}

inline std::uint8_t message_id(const Message& m) {
  return std::visit(
      [](const auto& v) -> std::uint8_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Opaque>)
          return v.id;
        else
          return static_cast<std::uint8_t>(std::decay_t<decltype(v)>::id);
      },
      m);
}

inline const char* message_name(std::uint8_t id) {
  switch (static_cast<MsgId>(id)) {
    case MsgId::Heartbeat: return "HEARTBEAT";
    case MsgId::State: return "STATE";
    case MsgId::Obstacle: return "OBSTACLE";
    case MsgId::SetThrust: return "SET_THRUST";
    case MsgId::SetVelHead: return "SET_VEL_HEAD";
    case MsgId::SetWaypoint: return "SET_WAYPOINT";
    case MsgId::SetMode: return "SET_MODE";
    case MsgId::Arm: return "ARM";
    case MsgId::Ack: return "ACK";
  }
  return "OPAQUE";
}

namespace detail {

struct Writer {
  Bytes& out;
  template <typename T>
  void put(T value) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out.push_back(static_cast<std::uint8_t>(u & 0xFF));
      if constexpr (sizeof(T) > 1) u = static_cast<U>(u >> 8);
    }
  }
};

struct Reader {
  std::span<const std::uint8_t> in;
  std::size_t pos = 0;
  template <typename T>
  T get() {
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      u = static_cast<U>(u | (static_cast<U>(in[pos + i]) << (8 * i)));
    pos += sizeof(T);
    return static_cast<T>(u);
  }
};

inline void write_payload(Writer& w, const Heartbeat& m) {
  w.put(m.mode);
  w.put(m.armed);
  w.put(m.health);
}
inline void write_payload(Writer& w, const State& m) {
  if (m.psi_cdeg >= 36000) throw EncodeError("STATE heading must be below 36000 cdeg");
  w.put(m.t_ms);
  w.put(m.x_mm);
  w.put(m.y_mm);
  w.put(m.psi_cdeg);
  w.put(m.u_mms);
  w.put(m.v_mms);
  w.put(m.r_cdps);
  w.put(m.thr_l_permille);
  w.put(m.thr_r_permille);
}
inline void write_payload(Writer& w, const Obstacle& m) {
  w.put(m.t_ms);
  for (std::uint16_t d : m.distances_cm) w.put(d);
}
inline void write_payload(Writer& w, const SetThrust& m) {
  w.put(m.left_permille);
  w.put(m.right_permille);
}
inline void write_payload(Writer& w, const SetVelHead& m) {
  if (m.heading_cdeg >= 36000) throw EncodeError("heading must be below 36000 cdeg");
  w.put(m.speed_mms);
  w.put(m.heading_cdeg);
}
inline void write_payload(Writer& w, const SetWaypoint& m) {
  w.put(m.x_mm);
  w.put(m.y_mm);
  w.put(m.accept_radius_cm);
}
inline void write_payload(Writer& w, const SetMode& m) { w.put(m.mode); }
inline void write_payload(Writer& w, const Arm& m) { w.put(m.flag); }
inline void write_payload(Writer& w, const Ack& m) {
  w.put(m.acked_id);
  w.put(m.result);
}
inline void write_payload(Writer& w, const Opaque& m) {
  if (fixed_length(m.id)) throw EncodeError("opaque message uses a known id");
  if (m.payload.size() > kMaxPayload) throw EncodeError("payload longer than 250 bytes");
  w.out.insert(w.out.end(), m.payload.begin(), m.payload.end());
}

inline Message read_payload(std::uint8_t id, std::span<const std::uint8_t> p) {
  Reader r{p};
  switch (static_cast<MsgId>(id)) {
    case MsgId::Heartbeat: {
      Heartbeat m;
      m.mode = r.get<std::uint8_t>();
      m.armed = r.get<std::uint8_t>();
      m.health = r.get<std::uint8_t>();
      return m;
    }
    case MsgId::State: {
      State m;
      m.t_ms = r.get<std::uint32_t>();
      m.x_mm = r.get<std::int32_t>();
      m.y_mm = r.get<std::int32_t>();
      m.psi_cdeg = r.get<std::uint16_t>();
      m.u_mms = r.get<std::int16_t>();
      m.v_mms = r.get<std::int16_t>();
      m.r_cdps = r.get<std::int16_t>();
      m.thr_l_permille = r.get<std::int16_t>();
      m.thr_r_permille = r.get<std::int16_t>();
      return m;
    }
    case MsgId::Obstacle: {
      Obstacle m;
      m.t_ms = r.get<std::uint32_t>();
      for (auto& d : m.distances_cm) d = r.get<std::uint16_t>();
      return m;
    }
    case MsgId::SetThrust: {
      SetThrust m;
      m.left_permille = r.get<std::int16_t>();
      m.right_permille = r.get<std::int16_t>();
      return m;
    }
    case MsgId::SetVelHead: {
      SetVelHead m;
      m.speed_mms = r.get<std::uint16_t>();
      m.heading_cdeg = r.get<std::uint16_t>();
      return m;
    }
    case MsgId::SetWaypoint: {
      SetWaypoint m;
      m.x_mm = r.get<std::int32_t>();
      m.y_mm = r.get<std::int32_t>();
      m.accept_radius_cm = r.get<std::uint16_t>();
      return m;
    }
    case MsgId::SetMode: return SetMode{r.get<std::uint8_t>()};
    case MsgId::Arm: return Arm{r.get<std::uint8_t>()};
    case MsgId::Ack: {
      Ack m;
      m.acked_id = r.get<std::uint8_t>();
      m.result = r.get<std::uint8_t>();
      return m;
    }
  }
  return Opaque{id, Bytes(p.begin(), p.end())};
}

}  // namespace detail

inline Bytes encode(const Message& msg, std::uint8_t seq) {
  Bytes out;
  out.reserve(kOverhead + Obstacle::size);
  out.push_back(kMagic);
  out.push_back(0);  // length, patched below
  out.push_back(seq);
  out.push_back(message_id(msg));
  detail::Writer w{out};
  std::visit([&](const auto& m) { detail::write_payload(w, m); }, msg);
  out[1] = static_cast<std::uint8_t>(out.size() - kHeaderSize);
  const std::uint16_t crc = crc16(std::span(out).subspan(1));
  w.put(crc);
  return out;
}

enum class DecodeError { BadMagic, BadLength, BadCrc };

inline const char* to_string(DecodeError e) {
  switch (e) {
    case DecodeError::BadMagic: return "bad magic";
    case DecodeError::BadLength: return "bad length";
    case DecodeError::BadCrc: return "bad crc";
  }
  return "?";
}

struct Decoded {
  Message message;
  std::uint8_t seq = 0;
  bool operator==(const Decoded&) const = default;
};

using DecodeResult = std::variant<Decoded, DecodeError>;

/// Decodes exactly one frame occupying all of `frame`.
inline DecodeResult decode(std::span<const std::uint8_t> frame) {
  if (frame.empty() || frame[0] != kMagic) return DecodeError::BadMagic;
  if (frame.size() < kOverhead) return DecodeError::BadLength;
  const std::size_t len = frame[1];
  if (len > kMaxPayload || frame.size() != kOverhead + len) return DecodeError::BadLength;
  const std::uint16_t sent =
      static_cast<std::uint16_t>(frame[kHeaderSize + len] | (frame[kHeaderSize + len + 1] << 8));
  if (crc16(frame.subspan(1, kHeaderSize - 1 + len)) != sent) return DecodeError::BadCrc;
  const std::uint8_t id = frame[3];
  if (const auto want = fixed_length(id); want && *want != len) return DecodeError::BadLength;
  return Decoded{detail::read_payload(id, frame.subspan(kHeaderSize, len)), frame[2]};
}

struct ParserStats {
  std::uint64_t frames = 0;
  std::uint64_t bad_magic = 0;   // runs of bytes skipped while hunting for 0xFA
  std::uint64_t bad_length = 0;
  std::uint64_t bad_crc = 0;
  std::uint64_t unknown_id = 0;
  std::uint64_t bytes_dropped = 0;
  bool operator==(const ParserStats&) const = default;
};

struct ParseBatch {
  std::vector<Decoded> frames;
  std::vector<DecodeError> diagnostics;
};

/// Incremental decoder for a byte stream. After any error it drops a single
/// byte and hunts for the next 0xFA, so a good frame that follows garbage is
/// never swallowed.
class StreamParser {
 public:
  ParseBatch feed(std::span<const std::uint8_t> chunk) {
    ParseBatch batch;
    while (!chunk.empty()) {
      const std::size_t room = kParserBuffer - buf_.size();
      const std::size_t take = std::min(room, chunk.size());
      buf_.insert(buf_.end(), chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(take));
      chunk = chunk.subspan(take);
      drain(batch, false);
    }
    return batch;
  }

  /// End of stream: whatever is left is either a partial frame or garbage.
  /// Rescans it so a complete frame hiding behind a bogus header is kept.
  ParseBatch finish() {
    ParseBatch batch;
    drain(batch, true);
    return batch;
  }

  const ParserStats& stats() const { return stats_; }
  std::size_t buffered() const { return buf_.size() - head_; }

 private:
  void drop(std::size_t n) {
    head_ += n;
    stats_.bytes_dropped += n;
  }

  void report(ParseBatch& batch, DecodeError e) {
    batch.diagnostics.push_back(e);
    switch (e) {
      case DecodeError::BadMagic: ++stats_.bad_magic; break;
      case DecodeError::BadLength: ++stats_.bad_length; break;
      case DecodeError::BadCrc: ++stats_.bad_crc; break;
    }
  }

  void drain(ParseBatch& batch, bool at_end) {
    for (;;) {
      const std::size_t avail = buf_.size() - head_;
      if (avail == 0) break;
      const std::uint8_t* p = buf_.data() + head_;
      if (p[0] != kMagic) {
        const auto* next = std::find(p, p + avail, kMagic);
        drop(static_cast<std::size_t>(next - p));
        report(batch, DecodeError::BadMagic);
        continue;
      }
      if (avail < kHeaderSize) {
        if (!at_end) break;
        drop(1);
        report(batch, DecodeError::BadLength);
        continue;
      }
      const std::size_t len = p[1];
      const auto want = fixed_length(p[3]);
      if (len > kMaxPayload || (want && *want != len)) {
        drop(1);
        report(batch, DecodeError::BadLength);
        continue;
      }
      if (avail < kOverhead + len) {
        if (!at_end) break;
        drop(1);
        report(batch, DecodeError::BadLength);
        continue;
      }
      const DecodeResult r = decode(std::span(p, kOverhead + len));
      if (const auto* d = std::get_if<Decoded>(&r)) {
        ++stats_.frames;
        if (std::holds_alternative<Opaque>(d->message)) ++stats_.unknown_id;
        batch.frames.push_back(*d);
        head_ += kOverhead + len;
      } else {
        drop(1);
        report(batch, std::get<DecodeError>(r));
      }
    }
    compact();
  }

  void compact() {
    if (head_ == 0) return;
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(head_));
    head_ = 0;
  }

  Bytes buf_;
  std::size_t head_ = 0;
  ParserStats stats_;
};

// Conversions between physical units and wire integers. Rounding is half away
// from zero; values that do not fit throw EncodeError.

template <typename T>
T to_wire(double value, double scale, const char* field) {
  const double scaled = value * scale;
  if (!std::isfinite(scaled)) throw EncodeError(std::string(field) + " is not finite");
  const double r = std::round(scaled);
  if (r < static_cast<double>(std::numeric_limits<T>::min()) ||
      r > static_cast<double>(std::numeric_limits<T>::max()))
    throw EncodeError(std::string(field) + " out of representable range");
  return static_cast<T>(r);
}

inline std::uint16_t heading_to_cdeg(double deg) {
  const auto c = static_cast<std::uint32_t>(std::round(wrap360(deg) * 100.0));
  return static_cast<std::uint16_t>(c % 36000);
}

struct Telemetry {
  double t = 0.0;
  double x_east = 0.0, y_north = 0.0;
  double psi = 0.0;
  double u = 0.0, v = 0.0, r = 0.0;   // m/s, m/s, deg/s
  double thrust_left = 0.0;           // normalized [-1, 1]
  double thrust_right = 0.0;
};

inline State make_state(const Telemetry& s) {
  State m;
  m.t_ms = to_wire<std::uint32_t>(s.t, 1000.0, "t");
  m.x_mm = to_wire<std::int32_t>(s.x_east, 1000.0, "x");
  m.y_mm = to_wire<std::int32_t>(s.y_north, 1000.0, "y");
  m.psi_cdeg = heading_to_cdeg(s.psi);
  m.u_mms = to_wire<std::int16_t>(s.u, 1000.0, "u");
  m.v_mms = to_wire<std::int16_t>(s.v, 1000.0, "v");
  m.r_cdps = to_wire<std::int16_t>(s.r, 100.0, "r");
  m.thr_l_permille = to_wire<std::int16_t>(s.thrust_left, 1000.0, "thrust_left");
  m.thr_r_permille = to_wire<std::int16_t>(s.thrust_right, 1000.0, "thrust_right");
  return m;
}

inline Telemetry from_state(const State& m) {
  return {m.t_ms / 1000.0, m.x_mm / 1000.0, m.y_mm / 1000.0, m.psi_cdeg / 100.0,
          m.u_mms / 1000.0, m.v_mms / 1000.0, m.r_cdps / 100.0,
          m.thr_l_permille / 1000.0, m.thr_r_permille / 1000.0};
}

inline Obstacle make_obstacle(const perception::SectorArray& a) {
  return {to_wire<std::uint32_t>(a.timestamp, 1000.0, "t"), a.distances_cm};
}

inline perception::SectorArray from_obstacle(const Obstacle& m) {
  perception::SectorArray a;
  a.distances_cm = m.distances_cm;
  a.timestamp = m.t_ms / 1000.0;
  return a;
}

inline SetWaypoint make_waypoint(double x_east, double y_north, double accept_radius) {
  return {to_wire<std::int32_t>(x_east, 1000.0, "x"),
          to_wire<std::int32_t>(y_north, 1000.0, "y"),
          to_wire<std::uint16_t>(accept_radius, 100.0, "accept_radius")};
}

inline SetVelHead make_vel_head(double speed, double heading_deg) {
  return {to_wire<std::uint16_t>(speed, 1000.0, "speed"), heading_to_cdeg(heading_deg)};
}

inline SetThrust make_thrust(double left, double right) {
  return {to_wire<std::int16_t>(std::clamp(left, -1.0, 1.0), 1000.0, "left"),
          to_wire<std::int16_t>(std::clamp(right, -1.0, 1.0), 1000.0, "right")};
}

/// Outbound sequence counter, wraps at 256.
class Sequencer {
 public:
  std::uint8_t next() { return seq_++; }
 private:
  std::uint8_t seq_ = 0;
};

}  // namespace helm::proto
