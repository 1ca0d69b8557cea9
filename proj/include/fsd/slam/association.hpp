#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/LU>

#include "fsd/ekf/chi2.hpp"
#include "fsd/slam/landmark.hpp"
#include "fsd/slam/particles.hpp"

namespace fsd::slam {

struct Association {
  enum class Kind { Existing, New };
  Kind kind = Kind::New;
  std::size_t landmark = 0;
  double d2 = std::numeric_limits<double>::infinity();
  double log_likelihood = -std::numeric_limits<double>::infinity();

  bool is_new() const { return kind == Kind::New; }
};

// Landmarks farther than this from the back-projected observation are not
// evaluated; no realistic gate reaches that far.
inline constexpr double kAssociationSearchRadius = 3.0;

// Maximum-likelihood association among landmarks passing the Mahalanobis gate.
inline Association associate_gated(const std::vector<Landmark>& landmarks, const Pose2& pose,
                                   const ConeObservation& obs, double gate_threshold) {
  Association best;
  const Vec2 point = backproject(pose, obs.range, obs.bearing);
  constexpr double kSearch2 = kAssociationSearchRadius * kAssociationSearchRadius;
  for (std::size_t i = 0; i < landmarks.size(); ++i) {
    const Landmark& lm = landmarks[i];
    if ((lm.mu - point).squaredNorm() > kSearch2) continue;
    const Eigen::Matrix2d S = landmark_innovation_cov(lm, pose, obs);
    const Vec2 nu = observation_innovation(obs, predict_observation(pose, lm.mu));
    const Eigen::Matrix2d Si = S.inverse();
    const double d2 = nu.dot(Si * nu);
    if (!(d2 <= gate_threshold)) continue;
    const double ll = -0.5 * d2 - std::log(kTwoPi) - 0.5 * std::log(S.determinant());
    if (ll > best.log_likelihood) {
      best.kind = Association::Kind::Existing;
      best.landmark = i;
      best.d2 = d2;
      best.log_likelihood = ll;
    }
  }
  return best;
}

inline Association associate(const Particle& p, const ConeObservation& obs, double gate_p) {
  return associate_gated(p.landmarks, p.pose, obs, ekf::chi2_gate(2, gate_p));
}

inline std::vector<ConeObservation> sorted_by_bearing(std::vector<ConeObservation> obs) {
  std::stable_sort(obs.begin(), obs.end(), [](const ConeObservation& a, const ConeObservation& b) {
    return a.bearing < b.bearing || (a.bearing == b.bearing && a.range < b.range);
  });
  return obs;
}

// FastSLAM weighting: existing matches add their log-likelihood and refine the
// landmark; unmatched observations add log(p0) and spawn a landmark.
// Observations must already be in bearing order.
inline Particle weigh_and_update_gated(Particle p, const std::vector<ConeObservation>& observations,
                                       double gate_threshold, double new_landmark_prob) {
  const double log_p0 = std::log(new_landmark_prob);
  for (const ConeObservation& obs : observations) {
    const Association a = associate_gated(p.landmarks, p.pose, obs, gate_threshold);
    if (a.is_new()) {
      p.log_weight += log_p0;
      p.landmarks.push_back(landmark_init(p.pose, obs));
    } else {
      p.log_weight += a.log_likelihood;
      p.landmarks[a.landmark] = landmark_update(p.landmarks[a.landmark], obs, p.pose);
    }
  }
  return p;
}

inline Particle weigh_and_update(Particle p, const std::vector<ConeObservation>& observations, double gate_p,
                                 double new_landmark_prob) {
  return weigh_and_update_gated(std::move(p), sorted_by_bearing(observations), ekf::chi2_gate(2, gate_p),
                                new_landmark_prob);
}

}  // namespace fsd::slam
