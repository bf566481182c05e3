#pragma once

// Simulated obstacle field and the range sensors that look at it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "helm/angles.hpp"
#include "helm/dynamics.hpp"
#include "helm/errors.hpp"
#include "helm/perception.hpp"

namespace helm::world {

struct Circle {
  double x_east = 0.0;
  double y_north = 0.0;
  double radius = 1.0;
  bool operator==(const Circle&) const = default;
};

struct Segment {
  double x1 = 0.0, y1 = 0.0;
  double x2 = 0.0, y2 = 0.0;
  bool operator==(const Segment&) const = default;
};

/// Region where sonar returns lose confidence (wakes, aeration).
struct TurbulenceZone {
  double x_east = 0.0;
  double y_north = 0.0;
  double radius = 5.0;
  double confidence = 20.0;
  bool operator==(const TurbulenceZone&) const = default;
};

struct ObstacleField {
  std::vector<Circle> circles;
  std::vector<Segment> segments;
  std::vector<TurbulenceZone> turbulence;
  bool operator==(const ObstacleField&) const = default;
};

inline constexpr double kNoHit = std::numeric_limits<double>::infinity();

// Distance along unit ray (dx, dy) from (ox, oy) to the circle, or kNoHit.
inline double ray_hit(double ox, double oy, double dx, double dy, const Circle& c) {
  const double fx = ox - c.x_east;
  const double fy = oy - c.y_north;
  const double b = fx * dx + fy * dy;
  const double cc = fx * fx + fy * fy - c.radius * c.radius;
  if (cc <= 0.0) return 0.0;  // origin inside
  const double disc = b * b - cc;
  if (disc < 0.0) return kNoHit;
  const double t = -b - std::sqrt(disc);
  return t >= 0.0 ? t : kNoHit;
}

inline double ray_hit(double ox, double oy, double dx, double dy, const Segment& s) {
  const double ex = s.x2 - s.x1;
  const double ey = s.y2 - s.y1;
  const double denom = dx * ey - dy * ex;
  if (std::abs(denom) < 1e-12) return kNoHit;  // parallel
  const double wx = s.x1 - ox;
  const double wy = s.y1 - oy;
  const double t = (wx * ey - wy * ex) / denom;
  const double k = (wx * dy - wy * dx) / denom;
  if (t < 0.0 || k < 0.0 || k > 1.0) return kNoHit;
  return t;
}

/// Nearest obstacle along compass bearing `bearing_deg` from (x, y).
inline double cast(const ObstacleField& f, double x, double y, double bearing_deg) {
  const double a = deg2rad(bearing_deg);
  const double dx = std::sin(a);
  const double dy = std::cos(a);
  double best = kNoHit;
  for (const Circle& c : f.circles) best = std::min(best, ray_hit(x, y, dx, dy, c));
  for (const Segment& s : f.segments) best = std::min(best, ray_hit(x, y, dx, dy, s));
  return best;
}

struct LidarConfig {
  int samples_per_sweep = 3200;  // 32 kS/s at 10 Hz
  double max_range = 40.0;
  double range_sigma = 0.02;
  std::uint8_t quality = 200;
};

inline perception::LidarSweep simulate_lidar(const ObstacleField& f,
                                             const dyn::VesselState& s,
                                             const LidarConfig& cfg, std::mt19937_64& rng) {
  if (cfg.samples_per_sweep < 1) throw RangeError("lidar needs at least one sample");
  perception::LidarSweep sweep;
  sweep.timestamp = s.t;
  sweep.samples.reserve(static_cast<std::size_t>(cfg.samples_per_sweep));
  const double step = 360.0 / cfg.samples_per_sweep;
  for (int i = 0; i < cfg.samples_per_sweep; ++i) {
    const double rel = i * step;
    const double d = cast(f, s.x_east, s.y_north, s.psi + rel);
    if (d > cfg.max_range) continue;  // no return
    const double noisy = std::max(0.0, d + dyn::gaussian(rng, cfg.range_sigma));
    sweep.samples.push_back({rel, noisy, cfg.quality});
  }
  return sweep;
}

struct SonarConfig {
  double mount_angle = 15.0;  // deg below horizontal
  double max_range = 30.0;    // slant
  double range_sigma = 0.1;
  double water_depth = 5.0;   // bottom seen when the beam meets it first
};

/// Forward sonar ping along the bow. Returns nothing if no echo in range.
inline std::optional<perception::SonarPing> simulate_sonar(const ObstacleField& f,
                                                           const dyn::VesselState& s,
                                                           const SonarConfig& cfg,
                                                           std::mt19937_64& rng) {
  const double tilt = deg2rad(cfg.mount_angle);
  double slant = kNoHit;
  const double horizontal = cast(f, s.x_east, s.y_north, s.psi);
  if (horizontal < kNoHit && std::cos(tilt) > 1e-9) slant = horizontal / std::cos(tilt);
  if (std::sin(tilt) > 1e-9) slant = std::min(slant, cfg.water_depth / std::sin(tilt));
  if (!(slant <= cfg.max_range)) return std::nullopt;

  double confidence = 100.0;
  for (const TurbulenceZone& z : f.turbulence)
    if (std::hypot(s.x_east - z.x_east, s.y_north - z.y_north) <= z.radius)
      confidence = std::min(confidence, z.confidence);
  return perception::SonarPing{std::max(0.0, slant + dyn::gaussian(rng, cfg.range_sigma)),
                               confidence, cfg.mount_angle};
}

}  // namespace helm::world
