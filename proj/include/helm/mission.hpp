#pragma once

// Closed-loop mission runs: the simulated vessel (physics 50 Hz, control
// 10 Hz, telemetry marks at 5 Hz), plan execution, the run log with its
// JSON-lines / CSV / plot exports, and metrics computed from a log.

#include <array>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "helm/autopilot.hpp"
#include "helm/config.hpp"
#include "helm/dynamics.hpp"
#include "helm/perception.hpp"
#include "helm/world.hpp"

namespace helm::mission {

using json = nlohmann::json;
using cfg::MissionPlan;

inline constexpr int kPhysicsHz = 50;
inline constexpr int kControlHz = 10;
inline constexpr int kTelemetryHz = 5;
inline constexpr int kSubsteps = kPhysicsHz / kControlHz;
inline constexpr double kControlDt = 1.0 / kControlHz;
inline constexpr double kPhysicsDt = 1.0 / kPhysicsHz;

// ---------------------------------------------------------------------------
// Survey pattern

/// Boustrophedon lanes over the rectangle spanned by two corners, parallel
/// to its long side and starting at the first corner. Lane offsets step by
/// `spacing`; the last lane sits on the far edge.
inline MissionPlan generate_survey_pattern(double x1, double y1, double x2, double y2,
                                           double spacing, double speed,
                                           double accept_radius = 2.0) {
  if (!(spacing > 0.0)) throw RangeError("lane spacing must be > 0");
  if (!(speed >= 0.0)) throw RangeError("transit speed must be >= 0");
  if (!(accept_radius > 0.0)) throw RangeError("accept radius must be > 0");
  const double w = std::abs(x2 - x1);
  const double h = std::abs(y2 - y1);
  if (!(w > 0.0 && h > 0.0)) throw RangeError("survey rectangle is degenerate");

  const bool along_x = w >= h;
  const double short_side = along_x ? h : w;
  const auto lanes = static_cast<std::size_t>(std::ceil(short_side / spacing)) + 1;
  const double across_sign = along_x ? (y2 > y1 ? 1.0 : -1.0) : (x2 > x1 ? 1.0 : -1.0);

  MissionPlan plan;
  plan.home_east = x1;
  plan.home_north = y1;
  for (std::size_t k = 0; k < lanes; ++k) {
    const double off = across_sign * std::min(static_cast<double>(k) * spacing, short_side);
    const bool forward = k % 2 == 0;
    for (int end = 0; end < 2; ++end) {
      const bool at_far = forward == (end == 1);
      cfg::WaypointItem wp;
      wp.accept_radius = accept_radius;
      wp.speed = speed;
      if (along_x) {
        wp.x_east = at_far ? x2 : x1;
        wp.y_north = y1 + off;
      } else {
        wp.x_east = x1 + off;
        wp.y_north = at_far ? y2 : y1;
      }
      plan.items.emplace_back(wp);
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Run log

struct Record {
  double t = 0.0;
  dyn::VesselState truth;
  double truth_forward_speed = 0.0;  // ground velocity along the bow
  dyn::Measurement measured;
  ctl::Mode mode = ctl::Mode::Hold;
  bool armed = false;
  int item = -1;  // active plan item, -1 when none
  ctl::Setpoint target;
  ctl::ControlOutput control;
  double speed_integral = 0.0;
  double heading_outer_integral = 0.0;
  double heading_inner_integral = 0.0;
  std::array<std::uint16_t, perception::kSectorCount> sectors{};
  bool shallow_water = false;
  std::uint64_t sector_digest = 0;
  double battery_fraction = 1.0;  // at the start of the tick
  double battery_used_ah = 0.0;   // cumulative, end of the tick
  bool telemetry = false;         // a 5 Hz telemetry tick
  bool operator==(const Record&) const = default;
};

enum class Termination { Completed, Timeout, Failsafe };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::Completed: return "completed";
    case Termination::Timeout: return "timeout";
    case Termination::Failsafe: return "failsafe";
  }
  return "?";
}

/// Process exit code for a run outcome.
inline int exit_code(Termination t) {
  switch (t) {
    case Termination::Completed: return 0;
    case Termination::Timeout: return 1;
    case Termination::Failsafe: return 3;
  }
  return 1;
}

struct RunLog {
  std::uint64_t seed = 0;
  std::string hull_preset;
  double battery_voltage = 0.0;
  std::vector<Record> records;
  std::vector<ctl::Event> events;
  Termination termination = Termination::Completed;
  double end_time = 0.0;
  bool operator==(const RunLog&) const = default;
};

/// FNV-1a over the little-endian sector distances.
inline std::uint64_t sector_digest(const std::array<std::uint16_t, perception::kSectorCount>& a) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint16_t d : a) {
    for (int b = 0; b < 2; ++b) {
      h ^= static_cast<std::uint8_t>(d >> (8 * b));
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Simulated vessel

/// One vessel: physics, sensors, perception, autopilot and battery. Commands
/// go to autopilot() between ticks; tick() runs one control period.
class VesselSim {
 public:
  VesselSim(const cfg::Config& c, double home_east = 0.0, double home_north = 0.0)
      : c_(c),
        sim_(c.vessel, c.environment, dyn::VesselState{0.0, home_east, home_north}),
        ap_(c.autopilot, c.vessel.thruster, c.vessel.thrusters_per_side, home_east, home_north),
        pipeline_(c.perception),
        rng_(c.environment.noise_seed) {
    last_obstacles_.sectors.distances_cm.fill(perception::kNoReading);
  }

  ctl::Autopilot& autopilot() { return ap_; }
  const ctl::Autopilot& autopilot() const { return ap_; }
  const dyn::Simulator& simulator() const { return sim_; }
  const cfg::Config& config() const { return c_; }
  double time() const { return sim_.state().t; }
  std::uint64_t ticks() const { return ticks_; }
  bool position_fix() const { return c_.position_fix; }
  double battery_fraction() const {
    return std::max(0.0, c_.battery.initial_fraction - used_ah_ / c_.battery.capacity_ah);
  }
  double battery_used_ah() const { return used_ah_; }
  const perception::FusedObstacles& obstacles() const { return last_obstacles_; }
  const dyn::Measurement& measurement() const { return last_measured_; }

  Record tick(std::optional<double> link_age = std::nullopt) {
    Record rec;
    rec.t = time();
    rec.truth = sim_.state();
    const auto [ve, vn] = dyn::ground_velocity(rec.truth, c_.environment);
    const double psi = deg2rad(rec.truth.psi);
    rec.truth_forward_speed = ve * std::sin(psi) + vn * std::cos(psi);
    rec.telemetry = ticks_ % (kControlHz / kTelemetryHz) == 0;

    dyn::Measurement m = dyn::sensor_sample(sim_.state(), c_.environment, rng_);
    m.position_fix = c_.position_fix;
    if (c_.perception_enabled) {
      const auto sweep = world::simulate_lidar(c_.world, sim_.state(), c_.lidar, rng_);
      const auto ping = world::simulate_sonar(c_.world, sim_.state(), c_.sonar, rng_);
      last_obstacles_ = pipeline_.process(sweep, ping, m.t);
    }
    last_measured_ = m;

    ctl::ControlInput in;
    in.measured = m;
    if (c_.perception_enabled) in.obstacles = last_obstacles_.sectors;
    in.link_age = link_age;
    in.battery_fraction = battery_fraction();
    in.dt = kControlDt;
    rec.battery_fraction = in.battery_fraction;
    rec.control = ap_.step(in);

    rec.measured = m;
    rec.mode = ap_.mode();
    rec.armed = ap_.armed();
    rec.target = ap_.setpoint();
    rec.speed_integral = ap_.speed_loop().pid().integral();
    rec.heading_outer_integral = ap_.heading_loop().outer().integral();
    rec.heading_inner_integral = ap_.heading_loop().inner().integral();
    rec.sectors = last_obstacles_.sectors.distances_cm;
    rec.shallow_water = last_obstacles_.shallow_water;
    rec.sector_digest = sector_digest(rec.sectors);

    sim_.command_pwm(rec.control.pwm_left, rec.control.pwm_right);
    for (int i = 0; i < kSubsteps; ++i) {
      sim_.advance(kPhysicsDt);
      const auto [tl, tr] = sim_.thrust();
      const double amps = cfg::battery_current(c_.battery, std::abs(tl) + std::abs(tr));
      used_ah_ += amps * kPhysicsDt / 3600.0;
    }
    rec.battery_used_ah = used_ah_;
    ++ticks_;
    return rec;
  }

 private:
  cfg::Config c_;
  dyn::Simulator sim_;
  ctl::Autopilot ap_;
  perception::Pipeline pipeline_;
  std::mt19937_64 rng_;
  perception::FusedObstacles last_obstacles_;
  dyn::Measurement last_measured_;
  double used_ah_ = 0.0;
  std::uint64_t ticks_ = 0;
};

// ---------------------------------------------------------------------------
// Plan execution

/// Steps through plan items. Waypoints finish on arrival, timed items when
/// their duration has elapsed, mode changes at once.
class PlanExecutor {
 public:
  PlanExecutor(const MissionPlan& plan, double loiter_radius)
      : plan_(plan), loiter_radius_(loiter_radius) {
    cfg::validate(plan_);
  }

  /// Activates the next item(s) if the current one is done. Returns false
  /// once every item has finished.
  bool advance(ctl::Autopilot& ap, double t) {
    while (true) {
      if (active_ && !done_ && !timed_out(t)) return true;
      if (active_) ++index_;
      active_ = false;
      if (index_ >= plan_.items.size()) return false;
      activate(ap, t);
    }
  }

  /// Feeds autopilot events of the last tick.
  void observe(const ctl::Event& e) {
    if (active_ && e.kind == ctl::EventKind::Arrival && e.from == ctl::Mode::GuidedPosition &&
        std::holds_alternative<cfg::WaypointItem>(plan_.items[index_]))
      done_ = true;
  }

  int index() const { return active_ ? static_cast<int>(index_) : -1; }

 private:
  bool timed_out(double t) const {
    double duration = -1.0;
    const auto& it = plan_.items[index_];
    if (const auto* v = std::get_if<cfg::VelHeadLeg>(&it)) duration = v->duration;
    if (const auto* l = std::get_if<cfg::LoiterAt>(&it)) duration = l->duration;
    if (const auto* w = std::get_if<cfg::Wait>(&it)) duration = w->duration;
    return duration > 0.0 && t - start_ >= duration - 1e-9;
  }

  void activate(ctl::Autopilot& ap, double t) {
    active_ = true;
    done_ = false;
    start_ = t;
    const auto& it = plan_.items[index_];
    const std::string cause = "plan item " + std::to_string(index_);
    if (const auto* w = std::get_if<cfg::WaypointItem>(&it)) {
      ap.set_mode(ctl::Mode::GuidedPosition,
                  ctl::WaypointSetpoint{w->x_east, w->y_north, w->accept_radius, w->speed,
                                        loiter_radius_},
                  t, cause);
    } else if (const auto* v = std::get_if<cfg::VelHeadLeg>(&it)) {
      ap.set_mode(ctl::Mode::GuidedVelocityHeading, ctl::VelHeadSetpoint{v->speed, v->heading},
                  t, cause);
    } else if (const auto* l = std::get_if<cfg::LoiterAt>(&it)) {
      ap.set_mode(ctl::Mode::Loiter,
                  ctl::LoiterSetpoint{l->x_east, l->y_north, l->radius.value_or(loiter_radius_)},
                  t, cause);
    } else if (const auto* s = std::get_if<cfg::SetModeItem>(&it)) {
      ap.set_mode(s->mode, ctl::NoSetpoint{}, t, cause);
      done_ = true;
    }
  }

  MissionPlan plan_;
  double loiter_radius_;
  std::size_t index_ = 0;
  bool active_ = false;
  bool done_ = false;
  double start_ = 0.0;
};

/// Deterministic headless run of `plan`. Ends when the plan completes, the
/// configured timeout passes, or a failsafe reaches its terminal state (the
/// low-battery return arrives home, or the pack is empty).
inline RunLog run_mission(const cfg::Config& c, const MissionPlan& plan) {
  cfg::validate(plan);
  RunLog log;
  log.seed = c.environment.noise_seed;
  log.hull_preset = c.hull_preset;
  log.battery_voltage = c.battery.voltage;

  VesselSim vessel(c, plan.home_east, plan.home_north);
  ctl::Autopilot& ap = vessel.autopilot();
  PlanExecutor exec(plan, c.autopilot.rtl_loiter_radius);
  ap.arm(true, vessel.position_fix(), 0.0);
  bool returning = false;

  for (;;) {
    const double t = vessel.time();
    if (!returning && !exec.advance(ap, t)) {
      log.termination = Termination::Completed;
      break;
    }
    if (t >= c.run.timeout - 1e-9) {
      log.termination = Termination::Timeout;
      break;
    }
    Record rec = vessel.tick();
    rec.item = returning ? -1 : exec.index();
    log.records.push_back(std::move(rec));

    bool home = false;
    for (ctl::Event& e : ap.drain_events()) {
      if (e.kind == ctl::EventKind::Failsafe && e.to == ctl::Mode::ReturnToLaunch) returning = true;
      if (e.kind == ctl::EventKind::Arrival && e.from == ctl::Mode::ReturnToLaunch) home = true;
      exec.observe(e);
      log.events.push_back(std::move(e));
    }
    if (home || vessel.battery_fraction() <= 0.0) {
      log.termination = Termination::Failsafe;
      break;
    }
  }
  log.end_time = vessel.time();
  return log;
}

// ---------------------------------------------------------------------------
// Metrics

struct LegStats {
  std::size_t item = 0;
  std::size_t samples = 0;
  double mean = 0.0;  // cross-track, m
  double rms = 0.0;
  double max = 0.0;
  std::optional<double> time_to_waypoint;  // s from leg start to arrival
};

struct Metrics {
  std::optional<double> speed_rmse;    // m/s over steady segments
  std::optional<double> heading_rmse;  // deg over steady segments
  std::size_t steady_samples = 0;
  std::vector<LegStats> legs;
  std::optional<double> loiter_max_excursion;  // m
  double energy_wh = 0.0;
};

/// Distance from (px, py) to the segment a-b.
inline double segment_distance(double px, double py, double ax, double ay, double bx,
                               double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double s = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return std::hypot(px - (ax + s * dx), py - (ay + s * dy));
}

/// Steady segments are maximal runs of armed GuidedVelocityHeading ticks
/// with an unchanged target; the first `settle_window` seconds of each are
/// skipped.
inline Metrics compute_metrics(const RunLog& log, const MissionPlan& plan,
                               double settle_window = 20.0) {
  Metrics out;
  double se = 0.0, he = 0.0;
  std::optional<double> seg_start;
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const Record& r = log.records[i];
    const bool steady = r.armed && r.mode == ctl::Mode::GuidedVelocityHeading &&
                        std::holds_alternative<ctl::VelHeadSetpoint>(r.target);
    if (!steady) {
      seg_start.reset();
      continue;
    }
    if (!seg_start || !(log.records[i - 1].target == r.target) ||
        log.records[i - 1].mode != r.mode)
      seg_start = r.t;
    if (r.t - *seg_start < settle_window - 1e-9) continue;
    const double ds = r.truth_forward_speed - r.control.speed_sp;
    const double dh = wrap_error(r.control.heading_sp, r.truth.psi);
    se += ds * ds;
    he += dh * dh;
    ++out.steady_samples;
  }
  if (out.steady_samples > 0) {
    out.speed_rmse = std::sqrt(se / out.steady_samples);
    out.heading_rmse = std::sqrt(he / out.steady_samples);
  }

  double prev_x = plan.home_east, prev_y = plan.home_north;
  for (std::size_t k = 0; k < plan.items.size(); ++k) {
    const auto* w = std::get_if<cfg::WaypointItem>(&plan.items[k]);
    if (const auto* l = std::get_if<cfg::LoiterAt>(&plan.items[k])) {
      prev_x = l->x_east;
      prev_y = l->y_north;
    }
    if (!w) continue;
    LegStats leg;
    leg.item = k;
    double sum = 0.0, sum2 = 0.0;
    std::optional<double> first_t;
    for (const Record& r : log.records) {
      if (r.item != static_cast<int>(k)) continue;
      if (!first_t) first_t = r.t;
      if (r.mode != ctl::Mode::GuidedPosition) continue;
      const double d =
          segment_distance(r.truth.x_east, r.truth.y_north, prev_x, prev_y, w->x_east, w->y_north);
      sum += d;
      sum2 += d * d;
      leg.max = std::max(leg.max, d);
      ++leg.samples;
    }
    if (leg.samples > 0) {
      leg.mean = sum / leg.samples;
      leg.rms = std::sqrt(sum2 / leg.samples);
    }
    if (first_t) {
      for (const ctl::Event& e : log.events)
        if (e.kind == ctl::EventKind::Arrival && e.from == ctl::Mode::GuidedPosition &&
            e.t >= *first_t) {
          leg.time_to_waypoint = e.t - *first_t;
          break;
        }
    }
    out.legs.push_back(leg);
    prev_x = w->x_east;
    prev_y = w->y_north;
  }

  for (const Record& r : log.records) {
    if (r.mode != ctl::Mode::Loiter) continue;
    if (const auto* a = std::get_if<ctl::LoiterSetpoint>(&r.target)) {
      const double d = std::hypot(r.truth.x_east - a->x_east, r.truth.y_north - a->y_north);
      out.loiter_max_excursion = std::max(out.loiter_max_excursion.value_or(0.0), d);
    }
  }
  if (!log.records.empty()) out.energy_wh = log.records.back().battery_used_ah * log.battery_voltage;
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline json target_json(const ctl::Setpoint& sp) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ctl::NoSetpoint>) return {{"kind", "none"}};
        if constexpr (std::is_same_v<T, ctl::ManualSetpoint>)
          return {{"kind", "manual"}, {"left", s.left}, {"right", s.right}};
        if constexpr (std::is_same_v<T, ctl::VelHeadSetpoint>)
          return {{"kind", "velhead"}, {"speed", s.speed}, {"heading", s.heading}};
        if constexpr (std::is_same_v<T, ctl::WaypointSetpoint>)
          return {{"kind", "waypoint"},       {"x", s.x_east},
                  {"y", s.y_north},           {"accept_radius", s.accept_radius},
                  {"speed", s.speed},         {"loiter_radius", s.loiter_radius}};
        if constexpr (std::is_same_v<T, ctl::LoiterSetpoint>)
          return {{"kind", "loiter"}, {"x", s.x_east}, {"y", s.y_north}, {"radius", s.radius}};
      },
      sp);
}

inline ctl::Setpoint target_from(const json& j) {
  const std::string k = j.at("kind").get<std::string>();
  if (k == "none") return ctl::NoSetpoint{};
  if (k == "manual") return ctl::ManualSetpoint{j.at("left"), j.at("right")};
  if (k == "velhead") return ctl::VelHeadSetpoint{j.at("speed"), j.at("heading")};
  if (k == "waypoint")
    return ctl::WaypointSetpoint{j.at("x"), j.at("y"), j.at("accept_radius"), j.at("speed"),
                                 j.at("loiter_radius")};
  if (k == "loiter") return ctl::LoiterSetpoint{j.at("x"), j.at("y"), j.at("radius")};
  throw std::runtime_error("unknown target kind " + k);
}

inline ctl::Mode mode_from(const json& j) {
  const auto m = cfg::mode_from_name(j.get<std::string>());
  if (!m) throw std::runtime_error("unknown mode " + j.get<std::string>());
  return *m;
}

inline ctl::EventKind event_kind_from(const std::string& s) {
  for (auto k : {ctl::EventKind::ModeChange, ctl::EventKind::Arrival, ctl::EventKind::Failsafe,
                 ctl::EventKind::Armed, ctl::EventKind::Disarmed, ctl::EventKind::ArmRefused})
    if (s == ctl::to_string(k)) return k;
  throw std::runtime_error("unknown event kind " + s);
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

inline json event_json(const ctl::Event& e) {
  return {{"type", "event"},
          {"t", e.t},
          {"kind", ctl::to_string(e.kind)},
          {"from", ctl::to_string(e.from)},
          {"to", ctl::to_string(e.to)},
          {"cause", e.cause}};
}

inline json record_json(const Record& r) {
  const auto& s = r.truth;
  const auto& m = r.measured;
  const auto& c = r.control;
  return {
      {"type", "tick"},
      {"t", r.t},
      {"truth",
       {{"t", s.t}, {"x", s.x_east}, {"y", s.y_north}, {"psi", s.psi}, {"u", s.u}, {"v", s.v},
        {"r", s.r}, {"forward_speed", r.truth_forward_speed}}},
      {"measured",
       {{"t", m.t}, {"x", m.x_east}, {"y", m.y_north}, {"psi", m.psi},
        {"sog", m.speed_over_ground}, {"cog", m.course_over_ground}, {"r", m.yaw_rate},
        {"fix", m.position_fix}}},
      {"mode", ctl::to_string(r.mode)},
      {"armed", r.armed},
      {"item", r.item},
      {"target", target_json(r.target)},
      {"pwm", {c.pwm_left, c.pwm_right}},
      {"thrust", {c.thrust.left, c.thrust.right}},
      {"control",
       {{"t_forward", c.t_forward}, {"t_yaw", c.t_yaw}, {"speed_sp", c.speed_sp},
        {"heading_sp", c.heading_sp}, {"rate_sp", c.rate_sp},
        {"proximity_scale", c.proximity_scale}, {"forward_speed", c.forward_speed},
        {"speed_integral", r.speed_integral}, {"heading_outer_integral", r.heading_outer_integral},
        {"heading_inner_integral", r.heading_inner_integral}}},
      {"sectors", r.sectors},
      {"shallow_water", r.shallow_water},
      {"digest", hex64(r.sector_digest)},
      {"battery", {{"fraction", r.battery_fraction}, {"used_ah", r.battery_used_ah}}},
      {"telemetry", r.telemetry},
  };
}

inline Record record_from(const json& j) {
  Record r;
  r.t = j.at("t");
  const json& s = j.at("truth");
  r.truth = {s.at("t"), s.at("x"), s.at("y"), s.at("psi"), s.at("u"), s.at("v"), s.at("r")};
  r.truth_forward_speed = s.at("forward_speed");
  const json& m = j.at("measured");
  r.measured = {m.at("t"), m.at("x"), m.at("y"), m.at("psi"), m.at("sog"), m.at("cog"),
                m.at("r"), m.at("fix")};
  r.mode = mode_from(j.at("mode"));
  r.armed = j.at("armed");
  r.item = j.at("item");
  r.target = target_from(j.at("target"));
  ctl::ControlOutput& c = r.control;
  c.pwm_left = j.at("pwm").at(0);
  c.pwm_right = j.at("pwm").at(1);
  c.thrust = {j.at("thrust").at(0), j.at("thrust").at(1)};
  const json& k = j.at("control");
  c.t_forward = k.at("t_forward");
  c.t_yaw = k.at("t_yaw");
  c.speed_sp = k.at("speed_sp");
  c.heading_sp = k.at("heading_sp");
  c.rate_sp = k.at("rate_sp");
  c.proximity_scale = k.at("proximity_scale");
  c.forward_speed = k.at("forward_speed");
  r.speed_integral = k.at("speed_integral");
  r.heading_outer_integral = k.at("heading_outer_integral");
  r.heading_inner_integral = k.at("heading_inner_integral");
  r.sectors = j.at("sectors").get<std::array<std::uint16_t, perception::kSectorCount>>();
  r.shallow_water = j.at("shallow_water");
  r.sector_digest = std::stoull(j.at("digest").get<std::string>(), nullptr, 16);
  r.battery_fraction = j.at("battery").at("fraction");
  r.battery_used_ah = j.at("battery").at("used_ah");
  r.telemetry = j.at("telemetry");
  return r;
}

}  // namespace detail

/// JSON lines: a header, one "tick" line per control tick followed by the
/// events raised in that tick, and an "end" line.
inline void write_jsonl(const RunLog& log, std::ostream& os) {
  os << json{{"type", "header"},
             {"format", "helm-runlog/1"},
             {"seed", log.seed},
             {"hull_preset", log.hull_preset},
             {"battery_voltage", log.battery_voltage},
             {"physics_hz", kPhysicsHz},
             {"control_hz", kControlHz},
             {"telemetry_hz", kTelemetryHz}}
            .dump()
     << '\n';
  std::size_t e = 0;
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    os << detail::record_json(log.records[i]).dump() << '\n';
    const double next = i + 1 < log.records.size() ? log.records[i + 1].t : log.end_time + 1.0;
    for (; e < log.events.size() && log.events[e].t < next - 1e-9; ++e)
      os << detail::event_json(log.events[e]).dump() << '\n';
  }
  for (; e < log.events.size(); ++e) os << detail::event_json(log.events[e]).dump() << '\n';
  os << json{{"type", "end"}, {"termination", to_string(log.termination)}, {"t", log.end_time}}
            .dump()
     << '\n';
}

inline std::string to_jsonl(const RunLog& log) {
  std::ostringstream os;
  write_jsonl(log, os);
  return os.str();
}

/// Reads a log written by write_jsonl. Malformed lines raise
/// std::runtime_error naming the line.
inline RunLog read_jsonl(std::istream& is) {
  RunLog log;
  std::string line;
  std::size_t n = 0;
  bool header = false, end = false;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const std::string type = j.at("type");
      if (type == "header") {
        log.seed = j.at("seed");
        log.hull_preset = j.at("hull_preset");
        log.battery_voltage = j.at("battery_voltage");
        header = true;
      } else if (type == "tick") {
        log.records.push_back(detail::record_from(j));
      } else if (type == "event") {
        log.events.push_back({j.at("t"), detail::event_kind_from(j.at("kind")),
                              detail::mode_from(j.at("from")), detail::mode_from(j.at("to")),
                              j.at("cause")});
      } else if (type == "end") {
        const std::string t = j.at("termination");
        log.termination = t == "completed" ? Termination::Completed
                          : t == "timeout" ? Termination::Timeout
                          : t == "failsafe" ? Termination::Failsafe
                                            : throw std::runtime_error("bad termination " + t);
        log.end_time = j.at("t");
        end = true;
      } else {
        throw std::runtime_error("unknown line type " + type);
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("run log line " + std::to_string(n) + ": " + e.what());
    }
  }
  if (!header || !end) throw std::runtime_error("run log is missing its header or end line");
  return log;
}

inline constexpr const char* kCsvHeader = "t,x,y,psi,u,sp_u,sp_psi,pwm_l,pwm_r";

/// Trajectory table, one row per control tick. u is the true ground speed
/// along the bow; sp_u and sp_psi are the controller setpoints.
inline void write_csv(const RunLog& log, std::ostream& os) {
  os << kCsvHeader << '\n';
  char buf[256];
  for (const Record& r : log.records) {
    std::snprintf(buf, sizeof buf, "%.1f,%.4f,%.4f,%.3f,%.4f,%.4f,%.3f,%d,%d\n", r.t,
                  r.truth.x_east, r.truth.y_north, r.truth.psi, r.truth_forward_speed,
                  r.control.speed_sp, r.control.heading_sp, r.control.pwm_left,
                  r.control.pwm_right);
    os << buf;
  }
}

inline json metrics_json(const Metrics& m) {
  json legs = json::array();
  for (const LegStats& l : m.legs)
    legs.push_back({{"item", l.item},
                    {"samples", l.samples},
                    {"cross_track_mean", l.mean},
                    {"cross_track_rms", l.rms},
                    {"cross_track_max", l.max},
                    {"time_to_waypoint", l.time_to_waypoint ? json(*l.time_to_waypoint) : json()}});
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(); };
  return {{"speed_rmse", opt(m.speed_rmse)},
          {"heading_rmse", opt(m.heading_rmse)},
          {"steady_samples", m.steady_samples},
          {"legs", legs},
          {"loiter_max_excursion", opt(m.loiter_max_excursion)},
          {"energy_wh", m.energy_wh}};
}

/// Metric summary plus the time series behind the speed/heading and track
/// plots.
inline json plot_data(const RunLog& log, const Metrics& m) {
  json s = {{"t", json::array()},  {"x", json::array()},     {"y", json::array()},
            {"psi", json::array()}, {"sp_psi", json::array()}, {"u", json::array()},
            {"sp_u", json::array()}, {"mode", json::array()}};
  for (const Record& r : log.records) {
    s["t"].push_back(r.t);
    s["x"].push_back(r.truth.x_east);
    s["y"].push_back(r.truth.y_north);
    s["psi"].push_back(r.truth.psi);
    s["sp_psi"].push_back(r.control.heading_sp);
    s["u"].push_back(r.truth_forward_speed);
    s["sp_u"].push_back(r.control.speed_sp);
    s["mode"].push_back(ctl::to_string(r.mode));
  }
  json events = json::array();
  for (const ctl::Event& e : log.events) events.push_back(detail::event_json(e));
  return {{"metrics", metrics_json(m)},
          {"termination", to_string(log.termination)},
          {"events", events},
          {"series", s}};
}

}  // namespace helm::mission
