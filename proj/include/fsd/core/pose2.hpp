#pragma once

#include <cmath>

#include <Eigen/Core>

#include "fsd/core/angle.hpp"

namespace fsd {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Planar rigid-body pose. The heading is kept wrapped to (-pi, pi].
class Pose2 {
 public:
  Pose2() = default;
  Pose2(double x, double y, double psi) : x_(x), y_(y), psi_(wrap_angle(psi)) {}
  Pose2(const Vec2& position, double psi) : Pose2(position.x(), position.y(), psi) {}

  static Pose2 identity() { return {}; }

  double x() const { return x_; }
  double y() const { return y_; }
  double psi() const { return psi_; }
  Vec2 position() const { return {x_, y_}; }

  bool operator==(const Pose2&) const = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double psi_ = 0.0;
};

// a (+) b : b expressed in the frame of a, mapped to the frame a lives in.
inline Pose2 pose_compose(const Pose2& a, const Pose2& b) {
  const double c = std::cos(a.psi());
  const double s = std::sin(a.psi());
  return {a.x() + c * b.x() - s * b.y(), a.y() + s * b.x() + c * b.y(), a.psi() + b.psi()};
}

inline Pose2 pose_inverse(const Pose2& a) {
  const double c = std::cos(a.psi());
  const double s = std::sin(a.psi());
  return {-c * a.x() - s * a.y(), s * a.x() - c * a.y(), -a.psi()};
}

// Relative motion taking `from` to `to`, expressed in the frame of `from`.
inline Pose2 pose_between(const Pose2& from, const Pose2& to) {
  return pose_compose(pose_inverse(from), to);
}

inline Vec2 transform_point(const Pose2& frame, const Vec2& p) {
  const double c = std::cos(frame.psi());
  const double s = std::sin(frame.psi());
  return {frame.x() + c * p.x() - s * p.y(), frame.y() + s * p.x() + c * p.y()};
}

}  // namespace fsd
