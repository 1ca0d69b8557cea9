#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "fsd/core/pose2.hpp"

namespace fsd::sim {

// Adverse-weather knobs applied on top of the nominal sensor models.
struct WeatherProfile {
  double range_factor = 1.0;    // LiDAR range multiplier, (0, 1]
  double clutter_rate = 0.0;    // spurious LiDAR points per scan
  double gps_dropout = 0.0;     // probability a GPS fix is lost
  double gps_bias_rate = 0.0;   // m/s of drift while the ramp is active
  double gps_bias_start = 0.0;  // s
  double gps_bias_duration = std::numeric_limits<double>::infinity();  // s
  double gps_bias_heading = 0.0;  // rad, drift direction in the world frame

  // Accumulated GPS offset at time t; held after the ramp ends.
  Vec2 gps_bias(double t) const {
    if (gps_bias_rate <= 0.0 || t <= gps_bias_start) return Vec2::Zero();
    const double active = std::min(t - gps_bias_start, gps_bias_duration);
    return gps_bias_rate * active * Vec2(std::cos(gps_bias_heading), std::sin(gps_bias_heading));
  }
};

}  // namespace fsd::sim
