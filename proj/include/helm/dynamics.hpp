#pragma once

// Planar 3-DOF (surge, sway, yaw) model of a twin-thruster, rudderless
// surface vessel. Heading is compass degrees clockwise from North; the world
// frame is East-North with its origin at the start position.
//
// Surge and sway in VesselState are through-water velocities. A uniform
// current is added in the kinematics only.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

#include "helm/angles.hpp"
#include "helm/errors.hpp"
#include "helm/hydrostatics.hpp"

namespace helm::dyn {

struct VesselState {
  double t = 0.0;        ///< s
  double x_east = 0.0;   ///< m
  double y_north = 0.0;  ///< m
  double psi = 0.0;      ///< deg, [0, 360)
  double u = 0.0;        ///< surge, m/s
  double v = 0.0;        ///< sway (starboard positive), m/s
  double r = 0.0;        ///< yaw rate, deg/s clockwise

  bool operator==(const VesselState&) const = default;
};

struct ThrusterModel {
  double max_static_thrust = 161.0;  // N
  double rated_speed = 3.6;          // m/s, speed at which thrust has decayed to eta_e
  double moving_efficiency_eta_e = 0.5;
  double separation = 0.5;  // m between port and starboard thrust lines
  int pwm_neutral = 1500;
  int pwm_min = 1100;
  int pwm_max = 1900;
  int deadband = 30;                   // us either side of neutral
  double response_time_constant = 0.2; // s

  bool operator==(const ThrusterModel&) const = default;
};

inline void validate(const ThrusterModel& m) {
  if (!(m.pwm_min < m.pwm_neutral && m.pwm_neutral < m.pwm_max))
    throw RangeError("pwm_min < pwm_neutral < pwm_max violated");
  if (!(m.moving_efficiency_eta_e > 0.0 && m.moving_efficiency_eta_e <= 1.0))
    throw RangeError("thruster eta_e must lie in (0, 1]");
  if (!(m.max_static_thrust > 0.0) || !(m.rated_speed > 0.0) ||
      !(m.separation > 0.0) || !(m.response_time_constant > 0.0))
    throw RangeError("thruster parameters must be positive");
  if (m.deadband < 0 || m.deadband >= std::min(m.pwm_max - m.pwm_neutral,
                                               m.pwm_neutral - m.pwm_min))
    throw RangeError("thruster deadband out of range");
}

struct EnvironmentField {
  double current_east = 0.0;   // m/s
  double current_north = 0.0;  // m/s
  double wind_force_east = 0.0;   // N
  double wind_force_north = 0.0;  // N
  std::uint64_t noise_seed = 1;
  double gps_sigma = 0.02;      // m
  double compass_sigma = 0.5;   // deg
  double speed_sigma = 0.02;    // m/s
  double gyro_sigma = 0.2;      // deg/s

  bool operator==(const EnvironmentField&) const = default;
};

inline void validate(const EnvironmentField& e) {
  if (e.gps_sigma < 0.0 || e.compass_sigma < 0.0 || e.speed_sigma < 0.0 ||
      e.gyro_sigma < 0.0)
    throw RangeError("sensor standard deviations must be >= 0");
}

struct BodyParams {
  double mass = 77.0;         // kg
  double yaw_inertia = 0.0;   // kg m^2; 0 selects m (L^2 + B^2) / 12
  double added_mass_surge = 0.05;  // fraction of mass
  double added_mass_sway = 0.50;
  double added_inertia_yaw = 0.30; // fraction of yaw inertia
  double d_v1 = 20.0;   // N s/m
  double d_v2 = 200.0;  // N s^2/m^2
  double d_r1 = 30.0;   // N m s/rad
  double d_r2 = 40.0;   // N m s^2/rad^2
  double d_u1 = 0.0;    // N s/m, surge calibration term

  bool operator==(const BodyParams&) const = default;
};

inline double default_yaw_inertia(double mass, double length, double beam) {
  return mass * (length * length + beam * beam) / 12.0;
}

inline void validate(const BodyParams& b) {
  if (!(b.mass > 0.0) || !(b.yaw_inertia >= 0.0))
    throw RangeError("body mass must be positive and inertia non-negative");
  for (double d : {b.added_mass_surge, b.added_mass_sway, b.added_inertia_yaw,
                   b.d_v1, b.d_v2, b.d_r1, b.d_r2, b.d_u1})
    if (!(d >= 0.0)) throw RangeError("damping and added-mass terms must be >= 0");
}

/// Everything the equations of motion need about the vessel.
struct VesselModel {
  BodyParams body;
  ThrusterModel thruster;
  int thrusters_per_side = 1;
  hydro::DragModel drag;

  double yaw_inertia() const {
    return body.yaw_inertia > 0.0
               ? body.yaw_inertia
               : default_yaw_inertia(body.mass, drag.hull.length_L, drag.hull.beam_B);
  }
  double max_thrust_per_side() const {
    return thruster.max_static_thrust * thrusters_per_side;
  }

  /// Hull resistance at a through-water speed. Below Rn = 1000 the flow is
  /// treated as creeping and resistance as zero.
  double hull_resistance(double speed) const {
    if (speed <= 0.0) return 0.0;
    if (hydro::reynolds_number(drag.hull.length_L, speed,
                               drag.fluid.kinematic_viscosity_nu) <= 1000.0)
      return 0.0;
    return drag(speed);
  }
};

// ---------------------------------------------------------------------------
// Thrusters

/// Normalized command in [-1, 1] for a pulse width. Linear between the edge
/// of the deadband and the end stops.
inline double normalized_from_pwm(int pwm, const ThrusterModel& m) {
  if (pwm < m.pwm_min || pwm > m.pwm_max) throw RangeError("pwm outside [pwm_min, pwm_max]");
  const int offset = pwm - m.pwm_neutral;
  if (std::abs(offset) <= m.deadband) return 0.0;
  if (offset > 0)
    return static_cast<double>(offset - m.deadband) /
           static_cast<double>(m.pwm_max - m.pwm_neutral - m.deadband);
  return static_cast<double>(offset + m.deadband) /
         static_cast<double>(m.pwm_neutral - m.pwm_min - m.deadband);
}

/// Inverse of normalized_from_pwm, rounded to the nearest microsecond.
inline int pwm_from_normalized(double n, const ThrusterModel& m) {
  n = std::clamp(n, -1.0, 1.0);
  if (n == 0.0) return m.pwm_neutral;
  const double span = n > 0.0 ? (m.pwm_max - m.pwm_neutral - m.deadband)
                              : (m.pwm_neutral - m.pwm_min - m.deadband);
  const double off = std::copysign(m.deadband + std::abs(n) * span, n);
  return std::clamp(m.pwm_neutral + static_cast<int>(std::lround(off)), m.pwm_min,
                    m.pwm_max);
}

/// Fraction of static thrust left at an advance speed: falls linearly from 1
/// at rest to eta_e at rated_speed, constant beyond.
inline double thrust_decay(double advance_speed, const ThrusterModel& m) {
  const double s = std::min(std::abs(advance_speed), m.rated_speed) / m.rated_speed;
  return 1.0 - (1.0 - m.moving_efficiency_eta_e) * s;
}

inline double effective_thrust(double normalized, const ThrusterModel& m,
                               double advance_speed) {
  return std::clamp(normalized, -1.0, 1.0) * m.max_static_thrust *
         thrust_decay(advance_speed, m);
}

inline double thrust_from_pwm(int pwm, const ThrusterModel& m, double advance_speed) {
  return effective_thrust(normalized_from_pwm(pwm, m), m, advance_speed);
}

// ---------------------------------------------------------------------------
// Equations of motion

struct StateRate {
  double x_east = 0.0;   // m/s
  double y_north = 0.0;  // m/s
  double psi = 0.0;      // deg/s
  double u = 0.0;        // m/s^2
  double v = 0.0;        // m/s^2
  double r = 0.0;        // deg/s^2

  bool operator==(const StateRate&) const = default;
};

inline double sign(double x) { return (x > 0.0) - (x < 0.0); }

/// Time derivative for given port/starboard thrust (N, total per side).
inline StateRate derivatives(const VesselState& s, double thrust_left,
                             double thrust_right, const EnvironmentField& env,
                             const VesselModel& vm) {
  const BodyParams& b = vm.body;
  const double m_u = b.mass * (1.0 + b.added_mass_surge);
  const double m_v = b.mass * (1.0 + b.added_mass_sway);
  const double i_z = vm.yaw_inertia() * (1.0 + b.added_inertia_yaw);

  const double psi = deg2rad(s.psi);
  const double sp = std::sin(psi);
  const double cp = std::cos(psi);
  const double r = deg2rad(s.r);

  // wind, world -> body
  const double wind_u = env.wind_force_east * sp + env.wind_force_north * cp;
  const double wind_v = env.wind_force_east * cp - env.wind_force_north * sp;

  const double au = std::abs(s.u);
  const double surge_drag = sign(s.u) * (vm.hull_resistance(au) + b.d_u1 * au);

  StateRate d;
  d.u = (thrust_left + thrust_right + wind_u - surge_drag) / m_u;
  d.v = (wind_v - b.d_v1 * s.v - b.d_v2 * s.v * std::abs(s.v)) / m_v;
  const double torque = (thrust_right - thrust_left) * (vm.thruster.separation / 2.0);
  d.r = rad2deg((torque - b.d_r1 * r - b.d_r2 * r * std::abs(r)) / i_z);
  d.x_east = s.u * sp + s.v * cp + env.current_east;
  d.y_north = s.u * cp - s.v * sp + env.current_north;
  d.psi = s.r;
  return d;
}

/// Actual (lagged) normalized command per side.
struct ThrusterState {
  double left = 0.0;
  double right = 0.0;

  bool operator==(const ThrusterState&) const = default;
};

struct ThrusterCommand {
  double left = 0.0;   // normalized [-1, 1]
  double right = 0.0;

  bool operator==(const ThrusterCommand&) const = default;
};

inline ThrusterCommand command_from_pwm(int pwm_left, int pwm_right,
                                        const ThrusterModel& m) {
  return {normalized_from_pwm(pwm_left, m), normalized_from_pwm(pwm_right, m)};
}

/// Per-side thrust (N) for an actual command at the current surge speed.
inline std::pair<double, double> side_thrust(const ThrusterState& act,
                                             const VesselModel& vm, double surge) {
  const double k = static_cast<double>(vm.thrusters_per_side);
  return {k * effective_thrust(act.left, vm.thruster, surge),
          k * effective_thrust(act.right, vm.thruster, surge)};
}

struct SimState {
  VesselState vessel;
  ThrusterState thrusters;

  bool operator==(const SimState&) const = default;
};

/// One classical RK4 step of vessel + first-order thruster lag. The command
/// is held constant over the step; heading is wrapped afterwards.
inline SimState step(const SimState& s0, const ThrusterCommand& cmd,
                     const EnvironmentField& env, const VesselModel& vm, double dt) {
  if (!(dt > 0.0 && dt <= 0.1)) throw RangeError("dt must lie in (0, 0.1]");
  const double tau = vm.thruster.response_time_constant;
  const ThrusterCommand c{std::clamp(cmd.left, -1.0, 1.0), std::clamp(cmd.right, -1.0, 1.0)};

  struct Rate {
    StateRate body;
    ThrusterState lag;
  };
  auto eval = [&](const SimState& s) {
    const auto [tl, tr] = side_thrust(s.thrusters, vm, s.vessel.u);
    return Rate{derivatives(s.vessel, tl, tr, env, vm),
                {(c.left - s.thrusters.left) / tau, (c.right - s.thrusters.right) / tau}};
  };
  auto advance = [](const SimState& s, const Rate& k, double h) {
    SimState o = s;
    o.vessel.x_east += h * k.body.x_east;
    o.vessel.y_north += h * k.body.y_north;
    o.vessel.psi += h * k.body.psi;  // unwrapped inside the step
    o.vessel.u += h * k.body.u;
    o.vessel.v += h * k.body.v;
    o.vessel.r += h * k.body.r;
    o.thrusters.left += h * k.lag.left;
    o.thrusters.right += h * k.lag.right;
    return o;
  };

  const Rate k1 = eval(s0);
  const Rate k2 = eval(advance(s0, k1, dt / 2));
  const Rate k3 = eval(advance(s0, k2, dt / 2));
  const Rate k4 = eval(advance(s0, k3, dt));

  auto comb = [&](double a, double b, double c2, double d) {
    return dt / 6.0 * (a + 2.0 * b + 2.0 * c2 + d);
  };
  SimState out = s0;
  out.vessel.x_east += comb(k1.body.x_east, k2.body.x_east, k3.body.x_east, k4.body.x_east);
  out.vessel.y_north += comb(k1.body.y_north, k2.body.y_north, k3.body.y_north, k4.body.y_north);
  out.vessel.psi = wrap360(s0.vessel.psi + comb(k1.body.psi, k2.body.psi, k3.body.psi, k4.body.psi));
  out.vessel.u += comb(k1.body.u, k2.body.u, k3.body.u, k4.body.u);
  out.vessel.v += comb(k1.body.v, k2.body.v, k3.body.v, k4.body.v);
  out.vessel.r += comb(k1.body.r, k2.body.r, k3.body.r, k4.body.r);
  out.thrusters.left += comb(k1.lag.left, k2.lag.left, k3.lag.left, k4.lag.left);
  out.thrusters.right += comb(k1.lag.right, k2.lag.right, k3.lag.right, k4.lag.right);
  out.vessel.t = s0.vessel.t + dt;
  return out;
}

/// Kinetic energy including added mass, J.
inline double kinetic_energy(const VesselState& s, const VesselModel& vm) {
  const BodyParams& b = vm.body;
  const double r = deg2rad(s.r);
  return 0.5 * b.mass * (1.0 + b.added_mass_surge) * s.u * s.u +
         0.5 * b.mass * (1.0 + b.added_mass_sway) * s.v * s.v +
         0.5 * vm.yaw_inertia() * (1.0 + b.added_inertia_yaw) * r * r;
}

/// Ground-frame velocity (east, north).
inline std::pair<double, double> ground_velocity(const VesselState& s,
                                                 const EnvironmentField& env) {
  const double psi = deg2rad(s.psi);
  return {s.u * std::sin(psi) + s.v * std::cos(psi) + env.current_east,
          s.u * std::cos(psi) - s.v * std::sin(psi) + env.current_north};
}

// ---------------------------------------------------------------------------
// Top speed

/// Steady surge speed at full forward command on `thruster_count` thrusters,
/// found by bisection on thrust minus resistance.
inline double equilibrium_speed(int thruster_count, const VesselModel& vm) {
  if (thruster_count < 1) throw RangeError("thruster count must be >= 1");
  const double n = static_cast<double>(thruster_count);
  auto f = [&](double u) {
    return n * effective_thrust(1.0, vm.thruster, u) -
           (vm.hull_resistance(u) + vm.body.d_u1 * u);
  };
  if (!(f(0.0) > 0.0)) throw NoEquilibrium("no forward thrust at rest");
  double lo = 0.0;
  double hi = 1.0;
  while (f(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e3) throw NoEquilibrium("resistance never balances thrust");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Surge damping d_u1 that puts the full-command equilibrium of
/// `thruster_count` thrusters exactly at `top_speed`.
inline double calibrate_surge_damping(const VesselModel& vm, int thruster_count,
                                      double top_speed) {
  if (thruster_count < 1 || !(top_speed > 0.0))
    throw RangeError("calibration needs >= 1 thruster and a positive speed");
  const double surplus = thruster_count * effective_thrust(1.0, vm.thruster, top_speed) -
                         vm.hull_resistance(top_speed);
  if (surplus < 0.0) throw NoEquilibrium("hull resistance alone exceeds thrust at top speed");
  return surplus / top_speed;
}

inline constexpr double kBepTwoThrusterTopSpeed = 2.2;  // m/s, field trial

/// Echoboat-160 survey vessel with the table-calibrated drag curve. Thrust
/// reaches its moving efficiency at the two-thruster trial speed and d_u1 is
/// solved so that two thrusters balance there.
inline VesselModel bep_calibrated_vessel(int thrusters_per_side = 1) {
  VesselModel vm;
  vm.drag = hydro::bep_calibrated_drag();
  vm.body.mass = vm.drag.hull.mass_M;
  vm.thruster.rated_speed = kBepTwoThrusterTopSpeed;
  vm.thrusters_per_side = thrusters_per_side;
  vm.body.d_u1 = calibrate_surge_damping(vm, 2, kBepTwoThrusterTopSpeed);
  return vm;
}

// ---------------------------------------------------------------------------
// Virtual sensors

struct Measurement {
  double t = 0.0;
  double x_east = 0.0;
  double y_north = 0.0;
  double psi = 0.0;             // compass, deg
  double speed_over_ground = 0.0;
  double course_over_ground = 0.0;  // deg
  double yaw_rate = 0.0;        // deg/s
  bool position_fix = true;

  bool operator==(const Measurement&) const = default;
};

inline double gaussian(std::mt19937_64& rng, double sigma) {
  if (sigma == 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

inline Measurement sensor_sample(const VesselState& s, const EnvironmentField& env,
                                 std::mt19937_64& rng) {
  const auto [ve, vn] = ground_velocity(s, env);
  Measurement m;
  m.t = s.t;
  m.x_east = s.x_east + gaussian(rng, env.gps_sigma);
  m.y_north = s.y_north + gaussian(rng, env.gps_sigma);
  m.psi = wrap360(s.psi + gaussian(rng, env.compass_sigma));
  m.speed_over_ground = std::max(0.0, std::hypot(ve, vn) + gaussian(rng, env.speed_sigma));
  m.course_over_ground = bearing_deg(ve, vn);
  m.yaw_rate = s.r + gaussian(rng, env.gyro_sigma);
  return m;
}

/// Truth-to-sim driver: owns the state, applies PWM commands, advances time
/// on a fixed-step counter so that t never drifts.
class Simulator {
 public:
  Simulator(VesselModel model, EnvironmentField env, VesselState initial = {})
      : model_(std::move(model)), env_(env) {
    validate(model_.body);
    validate(model_.thruster);
    validate(env_);
    state_.vessel = initial;
    state_.vessel.psi = wrap360(initial.psi);
    t0_ = initial.t;
  }

  void command_pwm(int left, int right) {
    command_ = command_from_pwm(left, right, model_.thruster);
  }
  void command_normalized(ThrusterCommand c) {
    command_ = {std::clamp(c.left, -1.0, 1.0), std::clamp(c.right, -1.0, 1.0)};
  }

  void advance(double dt) {
    state_ = step(state_, command_, env_, model_, dt);
    ++steps_;
    state_.vessel.t = t0_ + static_cast<double>(steps_) * dt;
  }

  const VesselState& state() const { return state_.vessel; }
  const SimState& full_state() const { return state_; }
  const ThrusterCommand& command() const { return command_; }
  const VesselModel& model() const { return model_; }
  const EnvironmentField& environment() const { return env_; }
  EnvironmentField& environment() { return env_; }
  std::uint64_t steps() const { return steps_; }

  std::pair<double, double> thrust() const {
    return side_thrust(state_.thrusters, model_, state_.vessel.u);
  }

 private:
  VesselModel model_;
  EnvironmentField env_;
  SimState state_;
  ThrusterCommand command_;
  double t0_ = 0.0;
  std::uint64_t steps_ = 0;
};

}  // namespace helm::dyn
