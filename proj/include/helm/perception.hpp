#pragma once

// Obstacle perception: 360 degree lidar sweeps and a forward sonar are reduced
// to a ring of 72 body-fixed sectors (5 degrees each, sector 0 centred on the
// bow, increasing clockwise) holding the nearest distance in centimetres.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "helm/angles.hpp"
#include "helm/errors.hpp"

namespace helm::perception {

inline constexpr std::size_t kSectorCount = 72;
inline constexpr double kSectorWidthDeg = 5.0;
inline constexpr std::uint16_t kNoReading = 65535;

struct LidarSample {
  double bearing = 0.0;   // deg relative to bow, clockwise, [0, 360)
  double distance = 0.0;  // m
  std::uint8_t quality = 0;
};

struct LidarSweep {
  std::vector<LidarSample> samples;
  double timestamp = 0.0;
};

struct SonarPing {
  double slant_distance = 0.0;  // m
  double confidence = 0.0;      // percent
  double mount_angle = 15.0;    // deg below horizontal
};

struct SectorArray {
  std::array<std::uint16_t, kSectorCount> distances_cm{};
  double timestamp = 0.0;

  SectorArray() { distances_cm.fill(kNoReading); }
  bool operator==(const SectorArray&) const = default;
};

using Bins = std::array<std::vector<double>, kSectorCount>;

/// Sector index for a body-relative bearing.
inline std::size_t sector_of(double bearing_deg) {
  const double shifted = wrap360(bearing_deg + kSectorWidthDeg / 2.0);
  return std::min<std::size_t>(kSectorCount - 1,
                               static_cast<std::size_t>(shifted / kSectorWidthDeg));
}

/// Centre bearing of a sector.
inline double sector_bearing(std::size_t sector) {
  return static_cast<double>(sector) * kSectorWidthDeg;
}

/// Groups sample distances by sector, dropping samples below `quality_min`.
inline Bins bin_sweep(const LidarSweep& sweep, std::uint8_t quality_min) {
  Bins bins;
  for (const LidarSample& s : sweep.samples) {
    if (s.quality < quality_min) continue;
    bins[sector_of(s.bearing)].push_back(s.distance);
  }
  return bins;
}

/// Weighted mean favouring the bin minimum: w_i = exp(-(d_i - d_min) / delta).
/// Empty bins have no value.
inline std::optional<double> weighted_min_average(std::span<const double> bin,
                                                  double delta) {
  if (!(delta > 0.0)) throw RangeError("weighting scale must be positive");
  if (bin.empty()) return std::nullopt;
  const double d_min = *std::min_element(bin.begin(), bin.end());
  double sw = 0.0;
  double swd = 0.0;
  for (double d : bin) {
    const double w = std::exp(-(d - d_min) / delta);
    sw += w;
    swd += w * d;
  }
  // never report past the weighted range because of rounding
  return std::max(d_min, swd / sw);
}

/// Moving average over the most recent qualifying pings.
class SonarFilter {
 public:
  SonarFilter(std::size_t window = 5, double confidence_min = 50.0)
      : window_(window), confidence_min_(confidence_min) {
    if (window_ < 1) throw RangeError("sonar window must be >= 1");
  }

  std::optional<double> push(const SonarPing& ping) {
    if (ping.confidence >= confidence_min_) {
      history_.push_back(ping.slant_distance);
      if (history_.size() > window_) history_.pop_front();
    }
    return value();
  }

  std::optional<double> value() const {
    if (history_.size() < (window_ + 1) / 2) return std::nullopt;
    double sum = 0.0;
    for (double d : history_) sum += d;
    return sum / static_cast<double>(history_.size());
  }

  void reset() { history_.clear(); }

 private:
  std::size_t window_;
  double confidence_min_;
  std::deque<double> history_;
};

struct SonarProjection {
  double horizontal_range = 0.0;  // m
  bool floor_mode = false;        // steep mount: sees the bottom, not obstacles
};

inline constexpr double kFloorModeAngleDeg = 50.0;

inline SonarProjection project_sonar(double slant, double mount_angle_deg) {
  if (!(slant >= 0.0)) throw RangeError("sonar distance must be non-negative");
  return {slant * std::cos(deg2rad(mount_angle_deg)),
          mount_angle_deg > kFloorModeAngleDeg};
}

struct FusionLimits {
  std::uint16_t min_range_cm = 5;
  std::uint16_t max_range_cm = 4000;
};

struct FusedObstacles {
  SectorArray sectors;
  bool shallow_water = false;  ///< floor-mode sonar reported a return
};

inline std::uint16_t to_centimeters(double meters, const FusionLimits& lim) {
  const double cm = std::floor(meters * 100.0 + 0.5);
  const double clamped = std::clamp(cm, static_cast<double>(lim.min_range_cm),
                                    static_cast<double>(lim.max_range_cm));
  return static_cast<std::uint16_t>(clamped);
}

/// Per sector minimum over available sources. Sonar only covers the bow
/// sector; in floor mode it raises the shallow-water flag instead.
inline FusedObstacles fuse(const std::array<std::optional<double>, kSectorCount>& lidar,
                           const std::optional<SonarProjection>& sonar,
                           const FusionLimits& lim = {}, double timestamp = 0.0) {
  if (lim.min_range_cm > lim.max_range_cm || lim.max_range_cm >= kNoReading)
    throw RangeError("fusion range limits inconsistent");
  FusedObstacles out;
  out.sectors.timestamp = timestamp;
  for (std::size_t i = 0; i < kSectorCount; ++i) {
    std::optional<double> best = lidar[i];
    if (i == 0 && sonar && !sonar->floor_mode)
      best = best ? std::min(*best, sonar->horizontal_range) : sonar->horizontal_range;
    if (best) out.sectors.distances_cm[i] = to_centimeters(*best, lim);
  }
  if (sonar && sonar->floor_mode) out.shallow_water = true;
  return out;
}

struct ProximityParams {
  double slow_distance = 10.0;  // m
  double stop_distance = 4.0;   // m
  int cone_half_width = 3;      // sectors either side of the bow
  double slow_factor = 0.3;
  bool operator==(const ProximityParams&) const = default;
};

inline void validate(const ProximityParams& p) {
  if (!(p.stop_distance < p.slow_distance) || !(p.stop_distance >= 0.0))
    throw RangeError("proximity policy needs 0 <= stop_distance < slow_distance");
  if (p.cone_half_width < 0 || p.cone_half_width > 36)
    throw RangeError("cone half width must be within [0, 36] sectors");
  if (!(p.slow_factor > 0.0 && p.slow_factor < 1.0))
    throw RangeError("slow factor must lie in (0, 1)");
}

/// Nearest reading inside the forward cone, metres.
inline std::optional<double> nearest_ahead(const SectorArray& a, int cone_half_width) {
  std::optional<double> nearest;
  for (int k = -cone_half_width; k <= cone_half_width; ++k) {
    const auto idx = static_cast<std::size_t>((k + static_cast<int>(kSectorCount)) %
                                              static_cast<int>(kSectorCount));
    const std::uint16_t cm = a.distances_cm[idx];
    if (cm == kNoReading) continue;
    const double m = cm / 100.0;
    if (!nearest || m < *nearest) nearest = m;
  }
  return nearest;
}

/// Speed scale 0 (stop), slow_factor, or 1 from the nearest obstacle ahead.
inline double proximity_policy(const SectorArray& a, const ProximityParams& p) {
  validate(p);
  const std::optional<double> d = nearest_ahead(a, p.cone_half_width);
  if (!d) return 1.0;
  if (*d <= p.stop_distance) return 0.0;
  if (*d <= p.slow_distance) return p.slow_factor;
  return 1.0;
}

struct PerceptionParams {
  std::uint8_t quality_min = 10;
  double weight_scale = 0.5;  // m
  std::size_t sonar_window = 5;
  double sonar_confidence_min = 50.0;
  FusionLimits limits;
  ProximityParams proximity;
};

/// One vessel's perception chain. Owns the sonar filter state.
class Pipeline {
 public:
  explicit Pipeline(PerceptionParams p = {})
      : params_(p), sonar_(p.sonar_window, p.sonar_confidence_min) {
    validate(params_.proximity);
  }

  FusedObstacles process(const LidarSweep& sweep, const std::optional<SonarPing>& ping,
                         double timestamp) {
    std::array<std::optional<double>, kSectorCount> lidar;
    const Bins bins = bin_sweep(sweep, params_.quality_min);
    for (std::size_t i = 0; i < kSectorCount; ++i)
      lidar[i] = weighted_min_average(bins[i], params_.weight_scale);

    std::optional<SonarProjection> sonar;
    if (ping) {
      const double mount = ping->mount_angle;
      if (const auto slant = sonar_.push(*ping)) sonar = project_sonar(*slant, mount);
    }
    return fuse(lidar, sonar, params_.limits, timestamp);
  }

  const PerceptionParams& params() const { return params_; }

 private:
  PerceptionParams params_;
  SonarFilter sonar_;
};

}  // namespace helm::perception
