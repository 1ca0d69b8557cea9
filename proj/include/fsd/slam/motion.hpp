#pragma once

#include <cmath>
#include <stdexcept>

#include "fsd/core/pose2.hpp"
#include "fsd/core/rng.hpp"
#include "fsd/slam/particles.hpp"

namespace fsd::slam {

// Odometry increment (body frame motion between two frames) perturbation model.
struct MotionNoise {
  double trans_per_m = 0.02;
  double trans_per_sqrt_s = 0.02;
  double rot_per_rad = 0.02;
  double rot_per_m = 0.002;
  double rot_per_sqrt_s = 0.005;
};

inline Pose2 sample_motion(const Pose2& pose, const Pose2& odom, double dt, double noise_scale,
                           const MotionNoise& noise, SeededRng& rng) {
  const double dist = std::hypot(odom.x(), odom.y());
  const double root_dt = std::sqrt(dt);
  const double s_trans = noise_scale * (noise.trans_per_m * dist + noise.trans_per_sqrt_s * root_dt);
  const double s_rot = noise_scale * (noise.rot_per_rad * std::abs(odom.psi()) + noise.rot_per_m * dist +
                                      noise.rot_per_sqrt_s * root_dt);
  const double nx = rng.normal(0.0, s_trans);
  const double ny = rng.normal(0.0, s_trans);
  const double npsi = rng.normal(0.0, s_rot);
  return pose_compose(pose, Pose2(odom.x() + nx, odom.y() + ny, odom.psi() + npsi));
}

// Propagates every particle by the odometry increment plus noise from its own stream.
inline ParticleSet pf_predict(ParticleSet ps, const Pose2& odom, double dt, double noise_scale,
                              const MotionNoise& noise = {}) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("pf_predict: dt must be positive");
  }
  for (Particle& p : ps.particles) {
    p.pose = sample_motion(p.pose, odom, dt, noise_scale, noise, p.rng);
  }
  return ps;
}

}  // namespace fsd::slam
