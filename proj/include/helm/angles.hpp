#pragma once

#include <cmath>
#include <numbers>

namespace helm {

inline constexpr double kDegPerRad = 180.0 / std::numbers::pi;
inline constexpr double kRadPerDeg = std::numbers::pi / 180.0;

inline double deg2rad(double deg) { return deg * kRadPerDeg; }
inline double rad2deg(double rad) { return rad * kDegPerRad; }

// Wrap any finite angle into [0, 360).
inline double wrap360(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  // fmod of tiny negatives can round up to exactly 360
  if (w >= 360.0) w -= 360.0;
  return w;
}

// Shortest signed difference target - current, in (-180, 180].
// A half-turn difference is reported as +180.
inline double wrap_error(double target_deg, double current_deg) {
  double e = wrap360(target_deg - current_deg);
  if (e > 180.0) e -= 360.0;
  return e;
}

// Compass bearing (clockwise from North) of the vector (east, north).
inline double bearing_deg(double east, double north) {
  return wrap360(rad2deg(std::atan2(east, north)));
}

}  // namespace helm
