#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "fsd/ekf/chi2.hpp"
#include "fsd/slam/association.hpp"
#include "fsd/slam/cone_map.hpp"
#include "fsd/slam/motion.hpp"
#include "fsd/slam/particles.hpp"

namespace fsd::slam {

struct SlamParams {
  std::size_t particles = 200;
  double gate_p = 0.99;
  double new_landmark_prob = 1e-4;
  int min_hits = 3;
  double merge_distance = 0.5;
  double noise_scale = 1.0;
  MotionNoise motion;
};

// Absolute position prior (e.g. the GPS-aided EKF position) applied as an
// extra likelihood factor on every particle.
struct PositionPrior {
  Vec2 position = Vec2::Zero();
  Cov2 cov = Cov2::Identity();
};

inline double position_prior_log_likelihood(const Pose2& pose, const PositionPrior& prior) {
  return log_gaussian(pose.position() - prior.position, prior.cov);
}

struct SlamStepSummary {
  double n_eff = 0.0;
  bool resampled = false;
  std::size_t best = 0;
  std::size_t best_landmarks = 0;
  Pose2 best_pose;
};

// FastSLAM 1.0 over cone landmarks. Per-particle work touches only that
// particle and its own rng stream.
class FastSlam {
 public:
  FastSlam(const SlamParams& params, const Pose2& start, std::uint64_t seed)
      : params_(params),
        gate_(ekf::chi2_gate(2, params.gate_p)),
        set_(make_particle_set(params.particles, start, seed)) {}

  const ParticleSet& particles() const { return set_; }
  const SlamParams& params() const { return params_; }

  SlamStepSummary step(const Pose2& odom, double dt, const std::vector<ConeObservation>& observations,
                       const std::optional<PositionPrior>& prior = std::nullopt) {
    set_ = pf_predict(std::move(set_), odom, dt, params_.noise_scale, params_.motion);
    const auto ordered = sorted_by_bearing(observations);
    for (Particle& p : set_.particles) {
      p = weigh_and_update_gated(std::move(p), ordered, gate_, params_.new_landmark_prob);
      if (prior) p.log_weight += position_prior_log_likelihood(p.pose, *prior);
    }
    SlamStepSummary summary;
    summary.best = best_particle(set_);
    summary.best_landmarks = set_.particles[summary.best].landmarks.size();
    summary.best_pose = set_.particles[summary.best].pose;
    ResampleReport report;
    set_ = resample(std::move(set_), &report);
    summary.n_eff = report.n_eff;
    summary.resampled = report.resampled;
    best_slot_ = summary.best;
    if (report.resampled) {
      // Track the first offspring of the best particle; all weights are now equal.
      for (std::size_t slot = 0; slot < report.parents.size(); ++slot) {
        if (report.parents[slot] == summary.best) {
          best_slot_ = slot;
          break;
        }
      }
    }
    return summary;
  }

  // Map of the particle that was most likely at the last weighting step.
  ConeMap extract() const { return particle_map(set_, best_slot_, params_.min_hits, params_.merge_distance); }
  const Particle& best() const { return set_.particles[best_slot_]; }

 private:
  SlamParams params_;
  double gate_;
  ParticleSet set_;
  std::size_t best_slot_ = 0;
};

}  // namespace fsd::slam
