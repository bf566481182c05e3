#pragma once

// JSON view of helm-link messages and the shared test-vector set that other
// decoder implementations check themselves against.
//
// Vector file: a JSON array of objects
//   {"name": str, "hex": "fa03...", "seq": n, "message": {...}}   well-formed
//   {"name": str, "hex": "...", "error": "bad crc"}               rejected
// where "message" carries "type" plus the wire fields in integer units.

#include <cstdio>
#include <random>
#include <string>

#include "json.hpp"

#include "helm/protocol.hpp"

namespace helm::proto {

using json = nlohmann::ordered_json;

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  std::string s;
  char buf[3];
  for (std::uint8_t b : bytes) {
    std::snprintf(buf, sizeof buf, "%02x", b);
    s += buf;
  }
  return s;
}

inline Bytes from_hex(const std::string& s) {
  if (s.size() % 2 != 0) throw std::invalid_argument("odd-length hex string");
  Bytes out;
  for (std::size_t i = 0; i < s.size(); i += 2)
    out.push_back(static_cast<std::uint8_t>(std::stoul(s.substr(i, 2), nullptr, 16)));
  return out;
}

inline json to_json(const Message& msg) {
  struct Visitor {
    json operator()(const Heartbeat& m) const {
      return {{"type", "HEARTBEAT"}, {"mode", m.mode}, {"armed", m.armed}, {"health", m.health}};
    }
    json operator()(const State& m) const {
      return {{"type", "STATE"},          {"t_ms", m.t_ms},
              {"x_mm", m.x_mm},           {"y_mm", m.y_mm},
              {"psi_cdeg", m.psi_cdeg},   {"u_mms", m.u_mms},
              {"v_mms", m.v_mms},         {"r_cdps", m.r_cdps},
              {"thr_l_permille", m.thr_l_permille}, {"thr_r_permille", m.thr_r_permille}};
    }
    json operator()(const Obstacle& m) const {
      return {{"type", "OBSTACLE"}, {"t_ms", m.t_ms}, {"distances_cm", m.distances_cm}};
    }
    json operator()(const SetThrust& m) const {
      return {{"type", "SET_THRUST"}, {"left", m.left_permille}, {"right", m.right_permille}};
    }
    json operator()(const SetVelHead& m) const {
      return {{"type", "SET_VEL_HEAD"}, {"speed_mms", m.speed_mms}, {"heading_cdeg", m.heading_cdeg}};
    }
    json operator()(const SetWaypoint& m) const {
      return {{"type", "SET_WAYPOINT"}, {"x_mm", m.x_mm}, {"y_mm", m.y_mm},
              {"accept_radius_cm", m.accept_radius_cm}};
    }
    json operator()(const SetMode& m) const { return {{"type", "SET_MODE"}, {"mode", m.mode}}; }
    json operator()(const Arm& m) const { return {{"type", "ARM"}, {"flag", m.flag}}; }
    json operator()(const Ack& m) const {
      return {{"type", "ACK"}, {"acked_id", m.acked_id}, {"result", m.result}};
    }
    json operator()(const Opaque& m) const {
      return {{"type", "OPAQUE"}, {"id", m.id}, {"payload_hex", to_hex(m.payload)}};
    }
  };
  return std::visit(Visitor{}, msg);
}

namespace detail {

inline Message random_message(std::mt19937_64& rng) {
  auto u = [&](auto lo, auto hi) {
    using T = decltype(lo);
    return static_cast<T>(std::uniform_int_distribution<long long>(lo, hi)(rng));
  };
  switch (u(0, 9)) {
    case 0: return Heartbeat{u(std::uint8_t{0}, std::uint8_t{5}), u(std::uint8_t{0}, std::uint8_t{1}),
                             u(std::uint8_t{0}, std::uint8_t{15})};
    case 1:
      return State{u(std::uint32_t{0}, std::uint32_t{4000000000u}),
                   u(std::int32_t{-2000000000}, std::int32_t{2000000000}),
                   u(std::int32_t{-2000000000}, std::int32_t{2000000000}),
                   u(std::uint16_t{0}, std::uint16_t{35999}),
                   u(std::int16_t{-32768}, std::int16_t{32767}),
                   u(std::int16_t{-32768}, std::int16_t{32767}),
                   u(std::int16_t{-32768}, std::int16_t{32767}),
                   u(std::int16_t{-1000}, std::int16_t{1000}),
                   u(std::int16_t{-1000}, std::int16_t{1000})};
    case 2: {
      Obstacle o{u(std::uint32_t{0}, std::uint32_t{4000000000u}), {}};
      for (auto& d : o.distances_cm)
        d = u(0, 3) == 0 ? perception::kNoReading : u(std::uint16_t{0}, std::uint16_t{4000});
      return o;
    }
    case 3: return SetThrust{u(std::int16_t{-1000}, std::int16_t{1000}), u(std::int16_t{-1000}, std::int16_t{1000})};
    case 4: return SetVelHead{u(std::uint16_t{0}, std::uint16_t{65535}), u(std::uint16_t{0}, std::uint16_t{35999})};
    case 5:
      return SetWaypoint{u(std::int32_t{-2000000000}, std::int32_t{2000000000}),
                         u(std::int32_t{-2000000000}, std::int32_t{2000000000}),
                         u(std::uint16_t{0}, std::uint16_t{65535})};
    case 6: return SetMode{u(std::uint8_t{0}, std::uint8_t{5})};
    case 7: return Arm{u(std::uint8_t{0}, std::uint8_t{1})};
    case 8: return Ack{u(std::uint8_t{0}, std::uint8_t{255}), u(std::uint8_t{0}, std::uint8_t{2})};
    default: {
      Opaque o{u(std::uint8_t{0x20}, std::uint8_t{0x7E}), {}};
      o.payload.resize(u(std::size_t{0}, std::size_t{40}));
      for (auto& b : o.payload) b = u(std::uint8_t{0}, std::uint8_t{255});
      return o;
    }
  }
}

}  // namespace detail

/// The published vector set. Deterministic for a given seed and count.
inline json test_vectors(std::uint64_t seed = 1, int random_count = 48) {
  json out = json::array();
  auto good = [&](std::string name, const Message& m, std::uint8_t seq) {
    const Bytes f = encode(m, seq);
    out.push_back({{"name", std::move(name)}, {"hex", to_hex(f)}, {"seq", seq}, {"message", to_json(m)}});
  };
  auto bad = [&](std::string name, const Bytes& f) {
    const auto r = decode(f);
    out.push_back({{"name", std::move(name)},
                   {"hex", to_hex(f)},
                   {"error", to_string(std::get<DecodeError>(r))}});
  };

  good("heartbeat guided armed", Heartbeat{1, 1, 0}, 0);
  good("heartbeat all health bits", Heartbeat{5, 1, 0x0F}, 255);
  good("state", State{123456, 10000, -20000, 35999, 1500, -250, -1234, 1000, -1000}, 7);
  good("state zero", State{}, 8);
  Obstacle o{2500, {}};
  o.distances_cm.fill(perception::kNoReading);
  o.distances_cm[0] = 500;
  o.distances_cm[1] = 510;
  o.distances_cm[71] = 0;
  good("obstacle bow return", o, 9);
  good("set thrust neutral", SetThrust{0, 0}, 10);
  good("set thrust full opposed", SetThrust{1000, -1000}, 11);
  good("set vel head", SetVelHead{1800, 24000}, 12);
  good("set waypoint", SetWaypoint{10000, 20000, 200}, 13);
  good("set waypoint negative", SetWaypoint{-2100000000, 2100000000, 65535}, 14);
  good("set mode loiter", SetMode{3}, 15);
  good("arm", Arm{1}, 16);
  good("disarm", Arm{0}, 17);
  good("ack ok", Ack{0x13, 0}, 18);
  good("ack rejected", Ack{0x10, 1}, 19);
  good("ack invalid", Ack{0x14, 2}, 20);
  good("unknown id kept opaque", Opaque{0x55, {0xDE, 0xAD, 0xBE, 0xEF}}, 21);
  good("unknown id empty payload", Opaque{0x20, {}}, 22);

  Bytes f = encode(Heartbeat{1, 1, 0}, 0);
  f[5] ^= 0x01;
  bad("payload bit flipped", f);
  f = encode(SetMode{2}, 3);
  f.back() ^= 0x80;
  bad("crc byte flipped", f);
  f = encode(Arm{1}, 4);
  f[0] = 0xFB;
  bad("wrong magic", f);
  f = encode(State{}, 5);
  f.pop_back();
  bad("truncated", f);
  {
    // SET_MODE id with a two-byte payload and a valid crc
    Bytes g = {kMagic, 2, 6, 0x13, 1, 2};
    const std::uint16_t crc = crc16(std::span(g).subspan(1));
    g.push_back(static_cast<std::uint8_t>(crc & 0xFF));
    g.push_back(static_cast<std::uint8_t>(crc >> 8));
    bad("length disagrees with id", g);
  }

  std::mt19937_64 rng(seed);
  for (int i = 0; i < random_count; ++i) {
    const auto seq = static_cast<std::uint8_t>(std::uniform_int_distribution<int>(0, 255)(rng));
    const Message m = detail::random_message(rng);
    good("random " + std::to_string(i), m, seq);
  }
  return out;
}

}  // namespace helm::proto
