#pragma once

// Control primitives for a differential-thrust vessel: PID loops, thrust
// mixer, L1 waypoint guidance, loiter and failsafe rules.
//
// Conventions: headings are compass degrees, yaw rates deg/s clockwise
// positive, forces in newtons. T_yaw > 0 means T_R > T_L, which turns the
// vessel clockwise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>

#include "helm/angles.hpp"
#include "helm/errors.hpp"

namespace helm::ctl {

enum class Mode : std::uint8_t {
  Manual = 0,
  GuidedVelocityHeading = 1,
  GuidedPosition = 2,
  Loiter = 3,
  Hold = 4,
  ReturnToLaunch = 5,
};

inline constexpr std::uint8_t kModeCount = 6;

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Manual: return "Manual";
    case Mode::GuidedVelocityHeading: return "GuidedVelocityHeading";
    case Mode::GuidedPosition: return "GuidedPosition";
    case Mode::Loiter: return "Loiter";
    case Mode::Hold: return "Hold";
    case Mode::ReturnToLaunch: return "ReturnToLaunch";
  }
  return "?";
}

inline std::optional<Mode> mode_from_code(std::uint8_t code) {
  if (code >= kModeCount) return std::nullopt;
  return static_cast<Mode>(code);
}

// ---------------------------------------------------------------------------
// PID

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double integral_limit = 1.0;  // bound on the integral term, output units
  double output_limit = 1.0;
  bool operator==(const PidGains&) const = default;
};

inline void validate(const PidGains& g) {
  if (!(g.kp >= 0.0 && g.ki >= 0.0 && g.kd >= 0.0))
    throw RangeError("PID gains must be >= 0");
  if (!(g.integral_limit > 0.0 && g.output_limit > 0.0))
    throw RangeError("PID limits must be > 0");
}

/// Parallel PID, derivative taken on the measurement so setpoint steps do
/// not kick the output.
class Pid {
 public:
  explicit Pid(PidGains g = {}) : g_(g) { validate(g_); }

  /// `measurement_rate` is d(measurement)/dt supplied by the caller.
  double update(double error, double measurement_rate, double dt) {
    if (!(dt > 0.0)) throw RangeError("PID dt must be > 0");
    integral_ += g_.ki * error * dt;
    integral_ = std::clamp(integral_, -g_.integral_limit, g_.integral_limit);
    p_ = g_.kp * error;
    d_ = -g_.kd * measurement_rate;
    return std::clamp(p_ + integral_ + d_, -g_.output_limit, g_.output_limit);
  }

  void reset() { integral_ = p_ = d_ = 0.0; }
  double integral() const { return integral_; }
  double proportional() const { return p_; }
  double derivative() const { return d_; }
  const PidGains& gains() const { return g_; }

 private:
  PidGains g_;
  double integral_ = 0.0;
  double p_ = 0.0;
  double d_ = 0.0;
};

/// Finite-difference rate of a sampled signal; zero on the first sample.
class RateEstimator {
 public:
  double update(double value, double dt) {
    const double rate = last_ ? (value - *last_) / dt : 0.0;
    last_ = value;
    return rate;
  }
  void reset() { last_.reset(); }

 private:
  std::optional<double> last_;
};

// ---------------------------------------------------------------------------
// Heading and speed loops

/// Outer loop: heading error -> yaw-rate setpoint (deg/s).
/// Inner loop: yaw-rate error -> T_yaw (N).
class HeadingController {
 public:
  HeadingController(PidGains outer, PidGains inner) : outer_(outer), inner_(inner) {}

  double step(double psi_sp, double psi, double yaw_rate, double dt,
              double rate_feedforward = 0.0) {
    const double err = wrap_error(psi_sp, psi);
    const double limit = outer_.gains().output_limit;
    r_sp_ = std::clamp(outer_.update(err, yaw_rate, dt) + rate_feedforward, -limit, limit);
    const double accel = accel_.update(yaw_rate, dt);
    return inner_.update(r_sp_ - yaw_rate, accel, dt);
  }

  void reset() {
    outer_.reset();
    inner_.reset();
    accel_.reset();
    r_sp_ = 0.0;
  }
  double rate_setpoint() const { return r_sp_; }
  const Pid& outer() const { return outer_; }
  const Pid& inner() const { return inner_; }

 private:
  Pid outer_;
  Pid inner_;
  RateEstimator accel_;
  double r_sp_ = 0.0;
};

/// Speed error -> T_forward in [0, 2 * max_thrust_per_side].
class SpeedController {
 public:
  explicit SpeedController(PidGains g) : pid_(g) {}

  double step(double u_sp, double u, double dt, double max_thrust_per_side) {
    const double accel = accel_.update(u, dt);
    const double out = pid_.update(u_sp - u, accel, dt);
    return std::clamp(out, 0.0, 2.0 * max_thrust_per_side);
  }

  void reset() {
    pid_.reset();
    accel_.reset();
  }
  const Pid& pid() const { return pid_; }

 private:
  Pid pid_;
  RateEstimator accel_;
};

// ---------------------------------------------------------------------------
// Mixer

struct MixerLimits {
  double max_thrust_per_side = 161.0;
  bool steering_priority = true;
  bool operator==(const MixerLimits&) const = default;
};

struct SideThrust {
  double left = 0.0;
  double right = 0.0;
  bool operator==(const SideThrust&) const = default;
};

inline SideThrust mix(double t_forward, double t_yaw, const MixerLimits& lim) {
  const double m = lim.max_thrust_per_side;
  if (!(m > 0.0)) throw RangeError("max_thrust_per_side must be > 0");
  if (!lim.steering_priority)
    return {std::clamp(t_forward - t_yaw, -m, m), std::clamp(t_forward + t_yaw, -m, m)};
  const double yaw = std::clamp(t_yaw, -m, m);
  const double room = m - std::abs(yaw);
  const double fwd = std::clamp(t_forward, -room, room);
  return {fwd - yaw, fwd + yaw};
}

// ---------------------------------------------------------------------------
// Guidance

struct L1Output {
  double heading_sp = 0.0;       // deg
  double rate_feedforward = 0.0; // deg/s
  double eta = 0.0;              // deg, course to line of sight
  double lateral_accel = 0.0;    // m/s^2
};

inline constexpr double kGuidanceMinSpeed = 0.1;   // below: pure bearing pursuit
inline constexpr double kGuidanceFullSpeed = 0.3;  // above: full L1 geometry

/// L1 pursuit of a point. `course` is the ground-velocity direction and
/// `ground_speed` its magnitude; the difference between heading and course
/// (crab from current) is carried into the heading setpoint.
inline L1Output l1_heading(double x_east, double y_north, double psi, double course,
                           double ground_speed, double wp_east, double wp_north,
                           double l1_distance) {
  if (!(l1_distance > 0.0)) throw RangeError("L1 distance must be > 0");
  if (!(ground_speed >= 0.0)) throw RangeError("ground speed must be >= 0");
  const double bearing = bearing_deg(wp_east - x_east, wp_north - y_north);
  L1Output out;
  out.eta = wrap_error(bearing, course);
  const double blend = std::clamp((ground_speed - kGuidanceMinSpeed) /
                                      (kGuidanceFullSpeed - kGuidanceMinSpeed),
                                  0.0, 1.0);
  out.lateral_accel =
      2.0 * ground_speed * ground_speed * std::sin(deg2rad(out.eta)) / l1_distance;
  if (ground_speed > kGuidanceMinSpeed)
    out.rate_feedforward = blend * rad2deg(out.lateral_accel / ground_speed);
  out.heading_sp = wrap360(bearing + blend * wrap_error(psi, course));
  return out;
}

// ---------------------------------------------------------------------------
// Loiter

struct LoiterParams {
  double hold_fraction = 0.5;   // inner band as a fraction of the loiter radius
  double creep_gain = 0.5;      // m/s per metre outside the band
  double max_creep_speed = 0.8; // m/s
  double heading_lock_distance = 0.3;  // m; closer than this keeps heading
  bool operator==(const LoiterParams&) const = default;
};

struct LoiterCommand {
  double speed = 0.0;
  double heading = 0.0;
};

/// Bow toward the anchor, speed proportional to the distance beyond the hold
/// band. Inside the band the speed setpoint is zero.
inline LoiterCommand loiter_step(double anchor_east, double anchor_north, double radius,
                                 double x_east, double y_north, double psi,
                                 const LoiterParams& p = {}) {
  if (!(radius > 0.0)) throw RangeError("loiter radius must be > 0");
  const double dx = anchor_east - x_east;
  const double dy = anchor_north - y_north;
  const double dist = std::hypot(dx, dy);
  LoiterCommand c;
  c.heading = dist > p.heading_lock_distance ? bearing_deg(dx, dy) : wrap360(psi);
  const double band = p.hold_fraction * radius;
  if (dist > band) c.speed = std::min(p.max_creep_speed, p.creep_gain * (dist - band));
  return c;
}

// ---------------------------------------------------------------------------
// Failsafes

struct FailsafeParams {
  double link_timeout = 5.0;      // s
  double battery_threshold = 0.2; // fraction
  bool operator==(const FailsafeParams&) const = default;
};

/// Low battery wins over link loss. `link_age` is empty when no ground link
/// has ever been established.
inline std::optional<Mode> failsafe_step(std::optional<double> link_age,
                                         double battery_fraction,
                                         const FailsafeParams& p = {}) {
  if (battery_fraction < p.battery_threshold) return Mode::ReturnToLaunch;
  if (link_age && *link_age > p.link_timeout) return Mode::Hold;
  return std::nullopt;
}

}  // namespace helm::ctl
