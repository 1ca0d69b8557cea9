#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "fsd/core/angle.hpp"
#include "fsd/core/pose2.hpp"
#include "fsd/core/rng.hpp"
#include "fsd/lidar/point_cloud.hpp"
#include "fsd/sim/track.hpp"
#include "fsd/sim/vehicle.hpp"
#include "fsd/sim/weather.hpp"

namespace fsd::sim {

struct LidarModel {
  double max_range = 12.0;          // m
  double points_numerator = 60.0;   // n(range) = max(min_points, round(numerator / range))
  int min_points = 3;
  double point_sigma = 0.02;        // m
  double cone_height = 0.31;        // m
  double cone_radius = 0.11;        // m, base
  double cone_top_ratio = 0.2;      // top radius as a fraction of the base radius
  double clutter_max_height = 0.5;  // m

  int points_for_range(double range) const {
    return std::max(min_points, static_cast<int>(std::lround(points_numerator / range)));
  }
};

// Isotropic Gaussian noise truncated to 3 sigma, so every point stays within
// 3 sigma of the frustum surface.
inline Vec3 truncated_noise(SeededRng& rng, double sigma) {
  if (sigma <= 0.0) return Vec3::Zero();
  while (true) {
    Vec3 n(rng.normal(0.0, sigma), rng.normal(0.0, sigma), rng.normal(0.0, sigma));
    if (n.norm() <= 3.0 * sigma) return n;
  }
}

// One 360-degree scan: frustum surface samples on every cone in range plus
// Poisson clutter uniform over the sensing disc.
inline lidar::PointCloud sense_lidar(const TruthState& truth, std::span<const Vec2> cones,
                                     const WeatherProfile& weather, const LidarModel& model, SeededRng& rng) {
  lidar::PointCloud cloud;
  cloud.t = truth.t;
  const double reach = model.max_range * weather.range_factor;
  const Pose2 world_to_sensor = pose_inverse(truth.pose);
  for (const Vec2& cone : cones) {
    const Vec2 c = transform_point(world_to_sensor, cone);
    const double range = c.norm();
    if (range > reach || range <= 0.0) continue;
    const int n = model.points_for_range(range);
    for (int k = 0; k < n; ++k) {
      const double phi = rng.uniform(0.0, kTwoPi);
      const double z = rng.uniform(0.0, model.cone_height);
      const double rad = model.cone_radius * (1.0 - (1.0 - model.cone_top_ratio) * z / model.cone_height);
      const Vec3 surface(c.x() + rad * std::cos(phi), c.y() + rad * std::sin(phi), z);
      cloud.points.push_back(surface + truncated_noise(rng, model.point_sigma));
    }
  }
  const int clutter = rng.poisson(weather.clutter_rate);
  for (int k = 0; k < clutter; ++k) {
    const double rad = reach * std::sqrt(rng.uniform());
    const double phi = rng.uniform(0.0, kTwoPi);
    const double z = rng.uniform(0.0, model.clutter_max_height);
    cloud.points.emplace_back(rad * std::cos(phi), rad * std::sin(phi), z);
  }
  return cloud;
}

inline lidar::PointCloud sense_lidar(const TruthState& truth, const Track& track, const WeatherProfile& weather,
                                     const LidarModel& model, SeededRng& rng) {
  const auto cones = track.all_cones();
  return sense_lidar(truth, std::span<const Vec2>(cones), weather, model, rng);
}

}  // namespace fsd::sim
