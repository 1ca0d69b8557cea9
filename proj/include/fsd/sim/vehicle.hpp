#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fsd/core/pose2.hpp"

namespace fsd::sim {

struct VehicleParams {
  double wheelbase = 1.55;   // m
  double max_steer = 0.45;   // rad
  double speed_tau = 1.0;    // s, first-order speed response
};

struct DriveCommand {
  double speed = 0.0;     // m/s
  double steering = 0.0;  // rad
};

// Exact ground truth of the rear-axle reference point.
struct TruthState {
  double t = 0.0;
  Pose2 pose;
  double vx = 0.0;
  double vy = 0.0;
  double r = 0.0;
  double ax = 0.0;  // longitudinal acceleration at t
};

// Kinematic bicycle with first-order speed tracking. Steering is held over the
// step, so the path is integrated in closed form (arc of constant curvature).
inline TruthState step_vehicle(const TruthState& s, const DriveCommand& cmd, double dt,
                               const VehicleParams& params = {}) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("step_vehicle: dt must be positive");
  }
  const double delta = std::clamp(cmd.steering, -params.max_steer, params.max_steer);
  const double curvature = std::tan(delta) / params.wheelbase;
  const double decay = std::exp(-dt / params.speed_tau);
  const double v0 = s.vx;
  const double v1 = cmd.speed + (v0 - cmd.speed) * decay;
  const double distance = cmd.speed * dt + (v0 - cmd.speed) * params.speed_tau * (1.0 - decay);

  const double dpsi = distance * curvature;
  double fwd = distance;
  double lat = 0.0;
  if (std::abs(dpsi) > 1e-9) {
    fwd = std::sin(dpsi) / curvature;
    lat = (1.0 - std::cos(dpsi)) / curvature;
  } else {
    lat = 0.5 * distance * dpsi;
  }

  TruthState out;
  out.t = s.t + dt;
  out.pose = pose_compose(s.pose, Pose2(fwd, lat, dpsi));
  out.vx = v1;
  out.vy = 0.0;
  out.r = v1 * curvature;
  out.ax = (cmd.speed - v1) / params.speed_tau;
  return out;
}

}  // namespace fsd::sim
