#pragma once

#include <cmath>
#include <span>

#include "fsd/core/angle.hpp"
#include "fsd/core/pose2.hpp"

namespace fsd::slam {

struct LoopClosureParams {
  double min_travel = 50.0;          // m
  double radius = 3.0;               // m
  double max_heading_diff = kPi / 4; // rad
};

inline double path_length(std::span<const Pose2> trajectory) {
  double total = 0.0;
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    total += (trajectory[i].position() - trajectory[i - 1].position()).norm();
  }
  return total;
}

// True once the trajectory has travelled far enough and is back near the start
// pose with a similar heading.
inline bool detect_loop_closure(std::span<const Pose2> trajectory, const Pose2& start,
                                const LoopClosureParams& params = {}) {
  if (trajectory.empty()) return false;
  const Pose2& now = trajectory.back();
  return path_length(trajectory) >= params.min_travel &&
         (now.position() - start.position()).norm() <= params.radius &&
         std::abs(wrap_angle(now.psi() - start.psi())) <= params.max_heading_diff;
}

}  // namespace fsd::slam
