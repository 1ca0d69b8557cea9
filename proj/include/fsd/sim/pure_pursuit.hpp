#pragma once

#include <algorithm>
#include <cmath>

#include "fsd/sim/track.hpp"
#include "fsd/sim/vehicle.hpp"

namespace fsd::sim {

struct PursuitParams {
  double min_lookahead = 4.0;  // m
  VehicleParams vehicle;
};

// Steers toward the centerline point max(v * lookahead_time, min_lookahead)
// ahead of the vehicle's projection onto the track.
inline DriveCommand pure_pursuit(const TruthState& s, const Track& track, double lookahead_time,
                                 double target_speed, const PursuitParams& params = {}) {
  const TrackProjection proj = track.project(s.pose.position());
  const double lookahead = std::max(std::abs(s.vx) * lookahead_time, params.min_lookahead);
  const Vec2 target = track.point_at(proj.s + lookahead);
  const Pose2 inv = pose_inverse(s.pose);
  const Vec2 local = transform_point(inv, target);
  const double dist = local.norm();

  DriveCommand cmd;
  cmd.speed = target_speed;
  if (dist > 1e-9) {
    const double alpha = std::atan2(local.y(), local.x());
    cmd.steering = std::atan(2.0 * params.vehicle.wheelbase * std::sin(alpha) / dist);
  }
  cmd.steering = std::clamp(cmd.steering, -params.vehicle.max_steer, params.vehicle.max_steer);
  return cmd;
}

}  // namespace fsd::sim
