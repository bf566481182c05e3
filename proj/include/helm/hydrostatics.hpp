#pragma once

/**
 * @file hydrostatics.hpp
 * @brief Hull resistance and thrust sizing for small displacement/planing USVs.
 *
 * Total resistance is split into a viscous part (ITTC-1957 friction line,
 * corrected by a form factor) and a wave-making part from a regression on
 * B/L, C_p, C_M, C_WL and the Froude number. Air resistance is taken as zero.
 *
 * Every intermediate coefficient is exposed so that sizing reports can show
 * the whole chain, and any coefficient can be pinned through
 * CoefficientOverrides (e.g. to reproduce values measured or tabulated
 * elsewhere).
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "helm/errors.hpp"

namespace helm::hydro {

/// Principal dimensions of the hull at the design waterline. SI units.
struct HullGeometry {
  double length_L = 0.0;                ///< m
  double beam_B = 0.0;                  ///< m
  double draft_D = 0.0;                 ///< m
  double displaced_volume_nabla = 0.0;  ///< m^3
  double midsection_area_AM = 0.0;      ///< m^2, submerged midship section
  double waterplane_area_AWP = 0.0;     ///< m^2
  double mass_M = 0.0;                  ///< kg

  bool operator==(const HullGeometry&) const = default;
};

struct FluidProperties {
  double density_rho = 1000.0;              ///< kg/m^3
  double kinematic_viscosity_nu = 1.002e-6; ///< m^2/s
  double gravity_g = 9.81;                  ///< m/s^2

  bool operator==(const FluidProperties&) const = default;
};

/// Pinned coefficients. A present value replaces the computed one.
struct CoefficientOverrides {
  std::optional<double> friction_CF;
  std::optional<double> form_factor_K;
  std::optional<double> wetted_area_Swet;
  std::optional<double> prismatic_Cp;
  std::optional<double> midship_CM;
  std::optional<double> waterplane_CWP;
  double wave_scale_kw = 1.0;

  bool operator==(const CoefficientOverrides&) const = default;
};

struct DragOptions {
  // Treat wave drag as zero below the threshold Froude number.
  bool low_froude_cutoff = false;
  double low_froude_threshold = 0.3;

  bool operator==(const DragOptions&) const = default;
};

struct DragBreakdown {
  double speed_V = 0.0;
  double reynolds_Rn = 0.0;
  double froude_Fn = 0.0;
  double friction_CF = 0.0;
  double form_factor_K = 0.0;
  double wetted_area_Swet = 0.0;
  double prismatic_Cp = 0.0;
  double midship_CM = 0.0;
  double waterplane_CWP = 0.0;
  double wave_c = 0.0;
  double wave_m1 = 0.0;
  double wave_m2 = 0.0;
  double wave_lambda = 0.0;
  double wave_exponent = 0.0;
  double viscous_RV = 0.0;
  double wave_RW = 0.0;
  double air_RA = 0.0;
  double total_RT = 0.0;
  bool coefficient_warning = false;  ///< a form coefficient left (0, 1]

  bool operator==(const DragBreakdown&) const = default;
};

struct ThrustPlan {
  double active_thrust_Ta = 0.0;
  double moving_efficiency_eta_e = 1.0;
  double nominal_thrust_Tn = 0.0;
  double safety_factor_ks = 1.0;
  double final_thrust_Tf = 0.0;
  double unit_static_thrust = 0.0;
  int thruster_count = 0;
};

// ---------------------------------------------------------------------------
// Validation

inline void validate(const HullGeometry& g) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw RangeError(std::string("hull ") + name + " must be positive");
  };
  positive(g.length_L, "length_L");
  positive(g.beam_B, "beam_B");
  positive(g.draft_D, "draft_D");
  positive(g.displaced_volume_nabla, "displaced_volume_nabla");
  positive(g.midsection_area_AM, "midsection_area_AM");
  positive(g.waterplane_area_AWP, "waterplane_area_AWP");
  positive(g.mass_M, "mass_M");
  if (g.displaced_volume_nabla > g.length_L * g.beam_B * g.draft_D)
    throw RangeError("hull displaced volume exceeds L*B*D box");
}

inline void validate(const FluidProperties& f) {
  if (!(f.density_rho > 0.0) || !(f.kinematic_viscosity_nu > 0.0) ||
      !(f.gravity_g > 0.0))
    throw RangeError("fluid properties must be positive");
}

inline void validate(const CoefficientOverrides& o) {
  for (const auto* v : {&o.friction_CF, &o.form_factor_K, &o.wetted_area_Swet,
                        &o.prismatic_Cp, &o.midship_CM, &o.waterplane_CWP}) {
    if (v->has_value() && (!(**v >= 0.0) || !std::isfinite(**v)))
      throw RangeError("coefficient override must be finite and non-negative");
  }
  if (!(o.wave_scale_kw >= 0.0) || !std::isfinite(o.wave_scale_kw))
    throw RangeError("wave_scale_kw must be finite and non-negative");
}

/// Floating equilibrium check: M == nabla * rho within a relative tolerance.
inline bool is_buoyancy_consistent(const HullGeometry& g,
                                   const FluidProperties& f,
                                   double rel_tol = 1e-9) {
  const double displaced_mass = g.displaced_volume_nabla * f.density_rho;
  return std::abs(g.mass_M - displaced_mass) <= rel_tol * displaced_mass;
}

// ---------------------------------------------------------------------------
// Coefficient chain

inline double wetted_surface(const HullGeometry& g) {
  return 2.0 * (g.length_L * g.beam_B + g.beam_B * g.draft_D +
                g.length_L * g.draft_D);
}

inline double reynolds_number(double length, double speed, double nu) {
  return length * speed / nu;
}

/// ITTC-1957 friction line. Singular at Rn = 100.
inline double friction_coefficient(double reynolds) {
  if (!(reynolds > 100.0))
    throw DomainError("friction coefficient requires Rn > 100");
  const double d = std::log10(reynolds) - 2.0;
  return 0.075 / (d * d);
}

// Uses L^2 * D in the denominator.
inline double form_factor(const HullGeometry& g) {
  const double ratio =
      g.displaced_volume_nabla / (g.length_L * g.length_L * g.draft_D);
  return 19.0 * ratio * ratio;
}

inline double froude_number(double speed, double length, double gravity) {
  return speed / std::sqrt(gravity * length);
}

struct FormCoefficients {
  double prismatic_Cp = 0.0;
  double midship_CM = 0.0;
  double waterplane_CWP = 0.0;
  bool warning = false;  ///< some coefficient outside (0, 1]
};

inline bool outside_unit_interval(double c) { return !(c > 0.0 && c <= 1.0); }

inline FormCoefficients form_coefficients(const HullGeometry& g) {
  FormCoefficients fc;
  fc.prismatic_Cp = g.displaced_volume_nabla / (g.midsection_area_AM * g.length_L);
  fc.midship_CM = g.midsection_area_AM / (g.beam_B * g.draft_D);
  fc.waterplane_CWP = g.waterplane_area_AWP / (g.length_L * g.beam_B);
  fc.warning = outside_unit_interval(fc.prismatic_Cp) ||
               outside_unit_interval(fc.midship_CM) ||
               outside_unit_interval(fc.waterplane_CWP);
  return fc;
}

// ---------------------------------------------------------------------------
// Viscous drag

struct ViscousTerms {
  double reynolds_Rn = 0.0;
  double friction_CF = 0.0;
  double form_factor_K = 0.0;
  double wetted_area_Swet = 0.0;
  double viscous_RV = 0.0;
};

inline ViscousTerms viscous_drag(const HullGeometry& g, const FluidProperties& f,
                                 double speed,
                                 const CoefficientOverrides& o = {}) {
  if (!(speed >= 0.0)) throw RangeError("speed must be non-negative");
  ViscousTerms t;
  if (speed == 0.0) return t;
  t.reynolds_Rn = reynolds_number(g.length_L, speed, f.kinematic_viscosity_nu);
  t.friction_CF = o.friction_CF ? *o.friction_CF : friction_coefficient(t.reynolds_Rn);
  t.form_factor_K = o.form_factor_K ? *o.form_factor_K : form_factor(g);
  t.wetted_area_Swet = o.wetted_area_Swet ? *o.wetted_area_Swet : wetted_surface(g);
  t.viscous_RV = 0.5 * f.density_rho * speed * speed * t.friction_CF *
                 (1.0 + t.form_factor_K) * t.wetted_area_Swet;
  return t;
}

// ---------------------------------------------------------------------------
// Wave drag

/// Direct inputs of the wave regression, for evaluating it with pinned values.
struct WaveInputs {
  double prismatic_Cp = 0.0;
  double midship_CM = 0.0;
  double waterline_CWL = 0.0;  // waterplane coefficient
  double beam_over_length = 0.0;
  double froude_Fn = 0.0;
  double displaced_volume_nabla = 0.0;
  double density_rho = 1000.0;
  double gravity_g = 9.81;
  double wave_scale_kw = 1.0;
};

struct WaveTerms {
  double froude_Fn = 0.0;
  double prismatic_Cp = 0.0;
  double midship_CM = 0.0;
  double waterplane_CWP = 0.0;
  double c = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  double lambda = 0.0;
  double exponent = 0.0;
  double raw_RW = 0.0;  ///< before wave_scale_kw
  double wave_RW = 0.0;
  bool coefficient_warning = false;
};

/// Evaluates the regression. The displacement is taken as a force
/// (nabla * rho * g) so that the result is in newtons.
inline WaveTerms wave_terms(const WaveInputs& in) {
  if (!(in.froude_Fn > 0.0)) throw DomainError("wave drag requires Fn > 0");
  const double bl = in.beam_over_length;
  const double cp = in.prismatic_Cp;
  const double fn = in.froude_Fn;
  WaveTerms t;
  t.froude_Fn = fn;
  t.prismatic_Cp = cp;
  t.midship_CM = in.midship_CM;
  t.waterplane_CWP = in.waterline_CWL;
  t.c = 569.0 * std::pow(bl, 2.984) * std::pow(in.midship_CM, -0.7439) *
        std::pow(in.waterline_CWL, 1.2655);
  t.m1 = -4.8507 * bl + 8.1768 * cp + 14.034 * cp * cp - 7.0682 * cp * cp * cp;
  const double inv_fn2 = 1.0 / (fn * fn);
  t.m2 = -0.4468 * std::exp(-0.1 * inv_fn2);
  t.lambda = 1.446 * cp - 0.03 / bl;
  t.exponent = t.m1 * std::pow(fn, -0.9) + t.m2 * std::cos(t.lambda * inv_fn2);
  const double displacement_force =
      in.displaced_volume_nabla * in.density_rho * in.gravity_g;
  t.raw_RW = displacement_force * t.c * std::exp(t.exponent);
  t.wave_RW = in.wave_scale_kw == 0.0 ? 0.0 : in.wave_scale_kw * t.raw_RW;
  return t;
}

inline WaveTerms wave_drag(const HullGeometry& g, const FluidProperties& f,
                           double speed, const CoefficientOverrides& o = {},
                           const DragOptions& opt = {}) {
  if (!(speed > 0.0)) throw DomainError("wave drag requires V > 0");
  const FormCoefficients fc = form_coefficients(g);
  WaveInputs in;
  in.prismatic_Cp = o.prismatic_Cp ? *o.prismatic_Cp : fc.prismatic_Cp;
  in.midship_CM = o.midship_CM ? *o.midship_CM : fc.midship_CM;
  in.waterline_CWL = o.waterplane_CWP ? *o.waterplane_CWP : fc.waterplane_CWP;
  in.beam_over_length = g.beam_B / g.length_L;
  in.froude_Fn = froude_number(speed, g.length_L, f.gravity_g);
  in.displaced_volume_nabla = g.displaced_volume_nabla;
  in.density_rho = f.density_rho;
  in.gravity_g = f.gravity_g;
  in.wave_scale_kw = o.wave_scale_kw;
  WaveTerms t = wave_terms(in);
  t.coefficient_warning = outside_unit_interval(in.prismatic_Cp) ||
                          outside_unit_interval(in.midship_CM) ||
                          outside_unit_interval(in.waterline_CWL);
  if (opt.low_froude_cutoff && t.froude_Fn < opt.low_froude_threshold) {
    t.raw_RW = 0.0;
    t.wave_RW = 0.0;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Total

inline DragBreakdown total_drag(const HullGeometry& g, const FluidProperties& f,
                                double speed, const CoefficientOverrides& o = {},
                                const DragOptions& opt = {}) {
  if (!(speed >= 0.0) || !std::isfinite(speed))
    throw RangeError("speed must be finite and non-negative");
  DragBreakdown b;
  b.speed_V = speed;
  if (speed == 0.0) return b;

  const ViscousTerms v = viscous_drag(g, f, speed, o);
  const WaveTerms w = wave_drag(g, f, speed, o, opt);
  b.reynolds_Rn = v.reynolds_Rn;
  b.froude_Fn = w.froude_Fn;
  b.friction_CF = v.friction_CF;
  b.form_factor_K = v.form_factor_K;
  b.wetted_area_Swet = v.wetted_area_Swet;
  b.prismatic_Cp = w.prismatic_Cp;
  b.midship_CM = w.midship_CM;
  b.waterplane_CWP = w.waterplane_CWP;
  b.wave_c = w.c;
  b.wave_m1 = w.m1;
  b.wave_m2 = w.m2;
  b.wave_lambda = w.lambda;
  b.wave_exponent = w.exponent;
  b.viscous_RV = v.viscous_RV;
  b.wave_RW = w.wave_RW;
  b.air_RA = 0.0;
  b.total_RT = b.viscous_RV + b.wave_RW + b.air_RA;
  b.coefficient_warning = w.coefficient_warning;
  return b;
}

/// Solves wave_scale_kw so that wave drag at `speed` equals `target_RW`.
inline double calibrate_wave_scale(const HullGeometry& g, const FluidProperties& f,
                                   double speed, double target_RW,
                                   CoefficientOverrides o = {}) {
  o.wave_scale_kw = 1.0;
  const WaveTerms w = wave_drag(g, f, speed, o);
  if (!(w.raw_RW > 0.0)) throw DomainError("raw wave drag is zero at calibration speed");
  return target_RW / w.raw_RW;
}

/// Uniform speed sweep; first row at v_min and last row at v_max exactly.
inline std::vector<DragBreakdown> drag_curve(const HullGeometry& g,
                                             const FluidProperties& f,
                                             double v_min, double v_max,
                                             std::size_t steps,
                                             const CoefficientOverrides& o = {},
                                             const DragOptions& opt = {}) {
  if (!(v_min >= 0.0) || !(v_max > v_min) || steps < 2)
    throw RangeError("drag_curve requires 0 <= v_min < v_max and steps >= 2");
  std::vector<DragBreakdown> rows;
  rows.reserve(steps);
  const double dv = (v_max - v_min) / static_cast<double>(steps - 1);
  for (std::size_t i = 0; i < steps; ++i) {
    const double v = (i + 1 == steps) ? v_max : v_min + dv * static_cast<double>(i);
    rows.push_back(total_drag(g, f, v, o, opt));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Thrust sizing

inline ThrustPlan thrust_plan(double total_resistance, double eta_e,
                              double safety_factor, double unit_static_thrust) {
  if (!(eta_e > 0.0 && eta_e <= 1.0))
    throw RangeError("moving efficiency must lie in (0, 1]");
  if (!(safety_factor >= 1.0)) throw RangeError("safety factor must be >= 1");
  if (!(unit_static_thrust > 0.0))
    throw RangeError("unit static thrust must be positive");
  if (!(total_resistance >= 0.0)) throw RangeError("resistance must be non-negative");
  ThrustPlan p;
  p.active_thrust_Ta = total_resistance;
  p.moving_efficiency_eta_e = eta_e;
  p.nominal_thrust_Tn = total_resistance / eta_e;
  p.safety_factor_ks = safety_factor;
  p.final_thrust_Tf = safety_factor * p.nominal_thrust_Tn;
  p.unit_static_thrust = unit_static_thrust;
  p.thruster_count =
      std::max(1, static_cast<int>(std::ceil(p.final_thrust_Tf / unit_static_thrust)));
  return p;
}

// ---------------------------------------------------------------------------
// Bundled drag model used by the simulator

struct DragModel {
  HullGeometry hull;
  FluidProperties fluid;
  CoefficientOverrides overrides;
  DragOptions options;

  DragBreakdown breakdown(double speed) const {
    return total_drag(hull, fluid, speed, overrides, options);
  }
  double operator()(double speed) const { return breakdown(speed).total_RT; }
};

// ---------------------------------------------------------------------------
// Reference data for the Echoboat-160 based survey vessel

inline HullGeometry bep_echoboat_160() {
  HullGeometry g;
  g.length_L = 1.7;
  g.beam_B = 0.8;
  g.draft_D = 0.25;
  g.displaced_volume_nabla = 0.077;
  g.midsection_area_AM = 0.231;
  g.waterplane_area_AWP = 1.075;
  g.mass_M = 77.0;
  return g;
}

inline constexpr double kBepDesignSpeed = 3.6;         // m/s (7 kn)
inline constexpr double kBepTabulatedWaveDrag = 86.18; // N

/// Coefficient values tabulated for the Echoboat hull. They are not all
/// reproducible from the geometry, hence the override route.
inline CoefficientOverrides bep_table_overrides() {
  CoefficientOverrides o;
  o.friction_CF = 0.00329126;
  o.form_factor_K = 0.9;
  o.wetted_area_Swet = 3.32;
  o.prismatic_Cp = 0.17;
  o.midship_CM = 0.52;
  o.waterplane_CWP = 0.7902;
  return o;
}

/// Table overrides with kw solved to reproduce the tabulated wave drag at
/// the design speed.
inline DragModel bep_calibrated_drag() {
  DragModel m;
  m.hull = bep_echoboat_160();
  m.overrides = bep_table_overrides();
  m.overrides.wave_scale_kw = calibrate_wave_scale(
      m.hull, m.fluid, kBepDesignSpeed, kBepTabulatedWaveDrag, m.overrides);
  return m;
}

}  // namespace helm::hydro
