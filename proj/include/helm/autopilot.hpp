#pragma once

// Mode state machine: turns the active mode + setpoint, measured state and
// obstacle ring into per-side thrust and PWM every control tick.

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "helm/control.hpp"
#include "helm/dynamics.hpp"
#include "helm/perception.hpp"

namespace helm::ctl {

struct ManualSetpoint {
  double left = 0.0;  // normalized [-1, 1]
  double right = 0.0;
  bool operator==(const ManualSetpoint&) const = default;
};

struct VelHeadSetpoint {
  double speed = 0.0;    // m/s
  double heading = 0.0;  // deg
  bool operator==(const VelHeadSetpoint&) const = default;
};

struct WaypointSetpoint {
  double x_east = 0.0;
  double y_north = 0.0;
  double accept_radius = 2.0;
  double speed = 1.0;  // transit
  double loiter_radius = 2.0;  // station-keeping radius after arrival
  bool operator==(const WaypointSetpoint&) const = default;
};

struct LoiterSetpoint {
  double x_east = 0.0;
  double y_north = 0.0;
  double radius = 2.0;
  bool operator==(const LoiterSetpoint&) const = default;
};

/// No target yet: the mode idles with thrusters neutral (Loiter anchors at
/// the current position instead).
struct NoSetpoint {
  bool operator==(const NoSetpoint&) const = default;
};

using Setpoint =
    std::variant<NoSetpoint, ManualSetpoint, VelHeadSetpoint, WaypointSetpoint, LoiterSetpoint>;

inline void validate(const Setpoint& sp) {
  if (const auto* m = std::get_if<ManualSetpoint>(&sp)) {
    if (!(std::abs(m->left) <= 1.0 && std::abs(m->right) <= 1.0))
      throw RangeError("manual commands must lie in [-1, 1]");
  } else if (const auto* v = std::get_if<VelHeadSetpoint>(&sp)) {
    if (!(v->speed >= 0.0)) throw RangeError("speed setpoint must be >= 0");
    if (!(v->heading >= 0.0 && v->heading < 360.0)) throw RangeError("heading must be in [0, 360)");
  } else if (const auto* w = std::get_if<WaypointSetpoint>(&sp)) {
    if (!(w->accept_radius > 0.0)) throw RangeError("accept radius must be > 0");
    if (!(w->speed >= 0.0)) throw RangeError("transit speed must be >= 0");
    if (!(w->loiter_radius > 0.0)) throw RangeError("loiter radius must be > 0");
  } else if (const auto* l = std::get_if<LoiterSetpoint>(&sp)) {
    if (!(l->radius > 0.0)) throw RangeError("loiter radius must be > 0");
  }
}

inline bool setpoint_fits(Mode mode, const Setpoint& sp) {
  if (std::holds_alternative<NoSetpoint>(sp)) return true;
  switch (mode) {
    case Mode::Manual: return std::holds_alternative<ManualSetpoint>(sp);
    case Mode::GuidedVelocityHeading: return std::holds_alternative<VelHeadSetpoint>(sp);
    case Mode::GuidedPosition: return std::holds_alternative<WaypointSetpoint>(sp);
    case Mode::Loiter: return std::holds_alternative<LoiterSetpoint>(sp);
    case Mode::Hold:
    case Mode::ReturnToLaunch: return false;
  }
  return false;
}

enum class EventKind { ModeChange, Arrival, Failsafe, Armed, Disarmed, ArmRefused };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::ModeChange: return "mode_change";
    case EventKind::Arrival: return "arrival";
    case EventKind::Failsafe: return "failsafe";
    case EventKind::Armed: return "armed";
    case EventKind::Disarmed: return "disarmed";
    case EventKind::ArmRefused: return "arm_refused";
  }
  return "?";
}

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::ModeChange;
  Mode from = Mode::Hold;
  Mode to = Mode::Hold;
  std::string cause;
  bool operator==(const Event&) const = default;
};

struct AutopilotParams {
  PidGains heading_outer{0.9, 0.05, 0.0, 5.0, 45.0};     // deg err -> deg/s
  PidGains heading_inner{2.5, 1.5, 0.1, 60.0, 161.0};    // deg/s err -> N
  PidGains speed{220.0, 60.0, 0.0, 322.0, 322.0};        // m/s err -> N
  bool steering_priority = true;
  double l1_distance = 5.0;
  double approach_gain = 0.3;  // 1/s: speed setpoint cap = gain * distance
  LoiterParams loiter;
  FailsafeParams failsafe;
  perception::ProximityParams proximity;
  bool obstacle_avoidance = true;
  double rtl_speed = 1.0;
  double rtl_loiter_radius = 2.0;
  bool operator==(const AutopilotParams&) const = default;
};

inline void validate(const AutopilotParams& p) {
  validate(p.heading_outer);
  validate(p.heading_inner);
  validate(p.speed);
  perception::validate(p.proximity);
  if (!(p.l1_distance > 0.0)) throw RangeError("L1 distance must be > 0");
  if (!(p.approach_gain > 0.0)) throw RangeError("approach gain must be > 0");
  if (!(p.rtl_speed >= 0.0) || !(p.rtl_loiter_radius > 0.0))
    throw RangeError("RTL speed must be >= 0 and radius > 0");
  if (!(p.loiter.hold_fraction >= 0.0 && p.loiter.hold_fraction < 1.0))
    throw RangeError("loiter hold fraction must lie in [0, 1)");
  if (!(p.loiter.creep_gain > 0.0) || !(p.loiter.max_creep_speed > 0.0))
    throw RangeError("loiter creep parameters must be > 0");
  if (!(p.failsafe.link_timeout > 0.0)) throw RangeError("link timeout must be > 0");
}

struct ControlInput {
  dyn::Measurement measured;
  std::optional<perception::SectorArray> obstacles;
  std::optional<double> link_age;  // empty: no ground link in use
  double battery_fraction = 1.0;
  double dt = 0.1;
};

struct ControlOutput {
  int pwm_left = 1500;
  int pwm_right = 1500;
  SideThrust thrust;       // N per side, as commanded
  double t_forward = 0.0;
  double t_yaw = 0.0;
  double speed_sp = 0.0;
  double heading_sp = 0.0;
  double rate_sp = 0.0;
  double proximity_scale = 1.0;
  double forward_speed = 0.0;  // measured, along the bow
  bool operator==(const ControlOutput&) const = default;
};

class Autopilot {
 public:
  Autopilot(AutopilotParams params, dyn::ThrusterModel thruster, int thrusters_per_side,
            double home_east = 0.0, double home_north = 0.0)
      : p_(params),
        thruster_(thruster),
        per_side_(thrusters_per_side),
        heading_(p_.heading_outer, p_.heading_inner),
        speed_(p_.speed),
        home_east_(home_east),
        home_north_(home_north) {
    validate(p_);
    dyn::validate(thruster_);
    if (per_side_ < 1) throw RangeError("need at least one thruster per side");
  }

  /// Switches mode. A setpoint of the wrong kind throws ModeMismatch. While
  /// the low-battery return is latched only ReturnToLaunch and Hold are
  /// accepted; the call returns false otherwise.
  bool set_mode(Mode mode, Setpoint sp, double t, const std::string& cause = "command") {
    if (!setpoint_fits(mode, sp))
      throw ModeMismatch(std::string("setpoint does not match mode ") + to_string(mode));
    validate(sp);
    if (rtl_latched_ && mode != Mode::ReturnToLaunch && mode != Mode::Hold) return false;
    transition(mode, std::move(sp), t, EventKind::ModeChange, cause);
    return true;
  }

  /// Arming needs a position fix; disarming always succeeds.
  bool arm(bool on, bool position_fix, double t) {
    if (on && !position_fix) {
      events_.push_back({t, EventKind::ArmRefused, mode_, mode_, "no position fix"});
      return false;
    }
    if (on != armed_) {
      armed_ = on;
      events_.push_back({t, on ? EventKind::Armed : EventKind::Disarmed, mode_, mode_, "command"});
      reset_loops();
    }
    return true;
  }

  void set_home(double east, double north) {
    home_east_ = east;
    home_north_ = north;
  }

  ControlOutput step(const ControlInput& in) {
    if (!(in.dt > 0.0)) throw RangeError("control dt must be > 0");
    const dyn::Measurement& m = in.measured;
    apply_failsafes(in);

    ControlOutput out;
    out.forward_speed =
        m.speed_over_ground * std::cos(deg2rad(m.course_over_ground - m.psi));
    out.heading_sp = m.psi;

    if (!armed_) {
      reset_loops();
      return out;
    }

    if (mode_ == Mode::Manual) {
      const auto* c = std::get_if<ManualSetpoint>(&sp_);
      const double l = c ? c->left : 0.0;
      const double r = c ? c->right : 0.0;
      out.pwm_left = dyn::pwm_from_normalized(l, thruster_);
      out.pwm_right = dyn::pwm_from_normalized(r, thruster_);
      const double decay = dyn::thrust_decay(out.forward_speed, thruster_);
      out.thrust = {l * max_per_side() * decay, r * max_per_side() * decay};
      return out;
    }

    std::optional<double> speed_target;
    double heading_target = m.psi;
    double rate_ff = 0.0;
    bool obey_obstacles = false;

    switch (mode_) {
      case Mode::GuidedVelocityHeading:
        if (const auto* v = std::get_if<VelHeadSetpoint>(&sp_)) {
          speed_target = v->speed;
          heading_target = v->heading;
          obey_obstacles = true;
        }
        break;
      case Mode::GuidedPosition:
      case Mode::ReturnToLaunch: {
        std::optional<WaypointSetpoint> wp;
        if (const auto* w = std::get_if<WaypointSetpoint>(&sp_)) wp = *w;
        if (mode_ == Mode::ReturnToLaunch)
          wp = WaypointSetpoint{home_east_, home_north_, p_.rtl_loiter_radius, p_.rtl_speed,
                                p_.rtl_loiter_radius};
        if (!wp) break;
        const double dist = std::hypot(wp->x_east - m.x_east, wp->y_north - m.y_north);
        if (dist <= wp->accept_radius) {
          const Mode from = mode_;
          transition(Mode::Loiter, LoiterSetpoint{wp->x_east, wp->y_north, wp->loiter_radius},
                     m.t, EventKind::Arrival,
                     from == Mode::ReturnToLaunch ? "home reached" : "accept radius");
          return step_loiter(m, in.dt, out);
        }
        const L1Output g = l1_heading(m.x_east, m.y_north, m.psi, m.course_over_ground,
                                      m.speed_over_ground, wp->x_east, wp->y_north,
                                      p_.l1_distance);
        speed_target = std::min(wp->speed, p_.approach_gain * dist);
        heading_target = g.heading_sp;
        rate_ff = g.rate_feedforward;
        obey_obstacles = true;
        break;
      }
      case Mode::Loiter:
        return step_loiter(m, in.dt, out);
      case Mode::Hold:
      case Mode::Manual:
        break;
    }

    if (!speed_target) {
      reset_loops();
      return out;
    }

    if (obey_obstacles && p_.obstacle_avoidance && in.obstacles)
      out.proximity_scale = perception::proximity_policy(*in.obstacles, p_.proximity);
    return close_loops(m, *speed_target * out.proximity_scale, heading_target, rate_ff,
                       out.proximity_scale == 0.0, in.dt, out);
  }

  Mode mode() const { return mode_; }
  const Setpoint& setpoint() const { return sp_; }
  bool armed() const { return armed_; }
  bool rtl_latched() const { return rtl_latched_; }
  const AutopilotParams& params() const { return p_; }
  const HeadingController& heading_loop() const { return heading_; }
  const SpeedController& speed_loop() const { return speed_; }
  double max_per_side() const { return thruster_.max_static_thrust * per_side_; }

  std::vector<Event> drain_events() {
    std::vector<Event> e;
    e.swap(events_);
    return e;
  }

 private:
  void transition(Mode to, Setpoint sp, double t, EventKind kind, const std::string& cause) {
    events_.push_back({t, kind, mode_, to, cause});
    mode_ = to;
    sp_ = std::move(sp);
    reset_loops();
  }

  void reset_loops() {
    heading_.reset();
    speed_.reset();
  }

  void apply_failsafes(const ControlInput& in) {
    const double t = in.measured.t;
    const auto forced = failsafe_step(in.link_age, in.battery_fraction, p_.failsafe);
    if (!forced) return;
    if (*forced == Mode::ReturnToLaunch) {
      if (rtl_latched_) return;
      rtl_latched_ = true;
      transition(Mode::ReturnToLaunch, NoSetpoint{}, t, EventKind::Failsafe, "low battery");
      return;
    }
    if (mode_ != Mode::Hold && !rtl_latched_)
      transition(Mode::Hold, NoSetpoint{}, t, EventKind::Failsafe, "link lost");
  }

  ControlOutput step_loiter(const dyn::Measurement& m, double dt, ControlOutput& out) {
    if (std::holds_alternative<NoSetpoint>(sp_))
      sp_ = LoiterSetpoint{m.x_east, m.y_north, p_.rtl_loiter_radius};
    const auto& a = std::get<LoiterSetpoint>(sp_);
    const LoiterCommand c =
        loiter_step(a.x_east, a.y_north, a.radius, m.x_east, m.y_north, m.psi, p_.loiter);
    return close_loops(m, c.speed, c.heading, 0.0, false, dt, out);
  }

  ControlOutput close_loops(const dyn::Measurement& m, double speed_sp, double heading_sp,
                            double rate_ff, bool stop, double dt, ControlOutput& out) {
    const double decay = dyn::thrust_decay(out.forward_speed, thruster_);
    const double available = max_per_side() * decay;
    out.speed_sp = speed_sp;
    out.heading_sp = heading_sp;
    out.t_forward = speed_.step(speed_sp, out.forward_speed, dt, available);
    if (stop) {
      // hard stop: no residual integral thrust pushing toward the obstacle
      speed_.reset();
      out.t_forward = 0.0;
    }
    out.t_yaw = heading_.step(heading_sp, m.psi, m.yaw_rate, dt, rate_ff);
    out.rate_sp = heading_.rate_setpoint();
    out.thrust = mix(out.t_forward, out.t_yaw, MixerLimits{available, p_.steering_priority});
    out.pwm_left = dyn::pwm_from_normalized(out.thrust.left / available, thruster_);
    out.pwm_right = dyn::pwm_from_normalized(out.thrust.right / available, thruster_);
    return out;
  }

  AutopilotParams p_;
  dyn::ThrusterModel thruster_;
  int per_side_;
  HeadingController heading_;
  SpeedController speed_;
  Mode mode_ = Mode::Hold;
  Setpoint sp_ = NoSetpoint{};
  bool armed_ = false;
  bool rtl_latched_ = false;
  double home_east_;
  double home_north_;
  std::vector<Event> events_;
};

}  // namespace helm::ctl
