#pragma once

#include <cmath>

#include <Eigen/Core>
#include <Eigen/LU>

#include "fsd/core/angle.hpp"
#include "fsd/core/covariance.hpp"
#include "fsd/core/pose2.hpp"
#include "fsd/lidar/cone_filter.hpp"

namespace fsd::slam {

using lidar::ConeObservation;
using Mat23 = Eigen::Matrix<double, 2, 3>;

// Range-bearing model h(pose, landmark) = (|lm - p|, wrap(atan2(lm - p) - psi)).
inline Vec2 predict_observation(const Pose2& pose, const Vec2& landmark) {
  const Vec2 d = landmark - pose.position();
  return {d.norm(), wrap_angle(std::atan2(d.y(), d.x()) - pose.psi())};
}

// dh/dlandmark.
inline Eigen::Matrix2d observation_jacobian_landmark(const Pose2& pose, const Vec2& landmark) {
  const Vec2 d = landmark - pose.position();
  const double q = d.squaredNorm();
  const double r = std::sqrt(q);
  Eigen::Matrix2d H;
  H << d.x() / r, d.y() / r, -d.y() / q, d.x() / q;
  return H;
}

// dh/d(x, y, psi).
inline Mat23 observation_jacobian_pose(const Pose2& pose, const Vec2& landmark) {
  const Eigen::Matrix2d Hl = observation_jacobian_landmark(pose, landmark);
  Mat23 H;
  H.leftCols<2>() = -Hl;
  H(0, 2) = 0.0;
  H(1, 2) = -1.0;
  return H;
}

inline Vec2 backproject(const Pose2& pose, double range, double bearing) {
  const double a = pose.psi() + bearing;
  return {pose.x() + range * std::cos(a), pose.y() + range * std::sin(a)};
}

// d(backproject)/d(range, bearing).
inline Eigen::Matrix2d backproject_jacobian(const Pose2& pose, double range, double bearing) {
  const double a = pose.psi() + bearing;
  Eigen::Matrix2d G;
  G << std::cos(a), -range * std::sin(a), std::sin(a), range * std::cos(a);
  return G;
}

inline Vec2 observation_innovation(const ConeObservation& obs, const Vec2& predicted) {
  return {obs.range - predicted.x(), wrap_angle(obs.bearing - predicted.y())};
}

inline double log_gaussian(const Vec2& nu, const Eigen::Matrix2d& S) {
  return -0.5 * nu.dot(S.inverse() * nu) - std::log(kTwoPi) - 0.5 * std::log(S.determinant());
}

// Log-likelihood of an observation of a fixed map cone whose position is
// known to within isotropic map_sigma.
inline double map_log_likelihood(const Pose2& pose, const ConeObservation& obs, const Vec2& cone,
                                 double map_sigma) {
  const Eigen::Matrix2d Hl = observation_jacobian_landmark(pose, cone);
  const Eigen::Matrix2d S = obs.R + map_sigma * map_sigma * Hl * Hl.transpose();
  return log_gaussian(observation_innovation(obs, predict_observation(pose, cone)), S);
}

// Gradient of map_log_likelihood with respect to (x, y, psi), including the
// dependence of the map term of S on the predicted range.
inline Vec3 map_log_likelihood_gradient(const Pose2& pose, const ConeObservation& obs, const Vec2& cone,
                                        double map_sigma) {
  const Vec2 pred = predict_observation(pose, cone);
  const double r = pred.x();
  const Eigen::Matrix2d Hl = observation_jacobian_landmark(pose, cone);
  const Eigen::Matrix2d S = obs.R + map_sigma * map_sigma * Hl * Hl.transpose();
  const Eigen::Matrix2d Si = S.inverse();
  const Vec2 nu = observation_innovation(obs, pred);
  const Mat23 Hp = observation_jacobian_pose(pose, cone);
  const Vec2 a = Si * nu;

  // H_l H_l^T = diag(1, 1/r^2), so dS/dr = diag(0, -2 sigma^2 / r^3).
  Eigen::Matrix2d dS_dr = Eigen::Matrix2d::Zero();
  dS_dr(1, 1) = -2.0 * map_sigma * map_sigma / (r * r * r);
  const double dll_dr = 0.5 * a.dot(dS_dr * a) - 0.5 * (Si * dS_dr).trace();

  return Hp.transpose() * a + dll_dr * Hp.row(0).transpose();
}

}  // namespace fsd::slam
