#pragma once

#include <Eigen/Cholesky>

#include "fsd/core/covariance.hpp"
#include "fsd/core/errors.hpp"
#include "fsd/slam/observation_model.hpp"

namespace fsd::slam {

struct Landmark {
  Vec2 mu = Vec2::Zero();
  Cov2 Sigma = Cov2::Identity();
  int hits = 1;
};

inline Landmark landmark_init(const Pose2& pose, const ConeObservation& obs) {
  const Eigen::Matrix2d G = backproject_jacobian(pose, obs.range, obs.bearing);
  Landmark lm;
  lm.mu = backproject(pose, obs.range, obs.bearing);
  lm.Sigma = symmetrize(G * obs.R * G.transpose());
  lm.hits = 1;
  return lm;
}

inline Eigen::Matrix2d landmark_innovation_cov(const Landmark& lm, const Pose2& pose, const ConeObservation& obs) {
  const Eigen::Matrix2d H = observation_jacobian_landmark(pose, lm.mu);
  return symmetrize(H * lm.Sigma * H.transpose() + obs.R);
}

// Per-landmark EKF update (pose held fixed), Joseph form.
inline Landmark landmark_update(const Landmark& lm, const ConeObservation& obs, const Pose2& pose) {
  const Eigen::Matrix2d H = observation_jacobian_landmark(pose, lm.mu);
  const Eigen::Matrix2d S = symmetrize(H * lm.Sigma * H.transpose() + obs.R);
  Eigen::LLT<Eigen::Matrix2d> llt(S);
  if (llt.info() != Eigen::Success || condition_number(S) > 1e12) {
    throw SingularInnovationError(condition_number(S));
  }
  const Eigen::Matrix2d K = llt.solve(H * lm.Sigma).transpose();
  const Vec2 nu = observation_innovation(obs, predict_observation(pose, lm.mu));
  const Eigen::Matrix2d IKH = Eigen::Matrix2d::Identity() - K * H;

  Landmark out;
  out.mu = lm.mu + K * nu;
  out.Sigma = symmetrize(IKH * lm.Sigma * IKH.transpose() + K * obs.R * K.transpose());
  out.hits = lm.hits + 1;
  return out;
}

}  // namespace fsd::slam
