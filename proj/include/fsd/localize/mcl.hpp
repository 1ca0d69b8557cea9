#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fsd/core/angle.hpp"
#include "fsd/core/covariance.hpp"
#include "fsd/core/pose2.hpp"
#include "fsd/core/rng.hpp"
#include "fsd/ekf/chi2.hpp"
#include "fsd/ekf/types.hpp"
#include "fsd/slam/association.hpp"
#include "fsd/slam/cone_map.hpp"
#include "fsd/slam/motion.hpp"
#include "fsd/slam/observation_model.hpp"
#include "fsd/slam/particles.hpp"

namespace fsd::localize {

using slam::ConeMap;
using slam::ConeObservation;

class LocalizationLostError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LocalizerParams {
  std::size_t particles = 200;
  double gate_p = 0.99;
  double outlier_prob = 1e-4;  // likelihood of an observation matching no map cone
  double map_sigma = 0.05;     // m, assumed map cone position error
  double init_spread_xy = 0.3;
  double init_spread_psi = 0.05;
  double min_sigma_xy = 0.05;
  double min_sigma_psi = deg_to_rad(1.0);
  double noise_scale = 1.0;
  slam::MotionNoise motion;

  Cov3 min_cov() const {
    return Vec3(min_sigma_xy * min_sigma_xy, min_sigma_xy * min_sigma_xy, min_sigma_psi * min_sigma_psi)
        .asDiagonal();
  }
};

// Frozen cone map with a uniform-grid lookup.
class MapIndex {
 public:
  explicit MapIndex(ConeMap map, double cell = 2.0) : map_(std::move(map)), cell_(cell) {
    for (std::size_t i = 0; i < map_.cones.size(); ++i) {
      grid_[key(map_.cones[i])].push_back(i);
    }
  }

  const ConeMap& map() const { return map_; }

  template <typename Fn>
  void for_each_near(const Vec2& p, double radius, Fn&& fn) const {
    const auto lo = key(p - Vec2(radius, radius));
    const auto hi = key(p + Vec2(radius, radius));
    for (std::int64_t gx = lo.first; gx <= hi.first; ++gx) {
      for (std::int64_t gy = lo.second; gy <= hi.second; ++gy) {
        auto it = grid_.find({gx, gy});
        if (it == grid_.end()) continue;
        for (std::size_t i : it->second) fn(i, map_.cones[i]);
      }
    }
  }

 private:
  std::pair<std::int64_t, std::int64_t> key(const Vec2& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
            static_cast<std::int64_t>(std::floor(p.y() / cell_))};
  }

  ConeMap map_;
  double cell_;
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> grid_;
};

struct LocalizerState {
  std::vector<Pose2> poses;
  std::vector<double> log_weights;
  std::vector<SeededRng> rngs;
  std::shared_ptr<const MapIndex> map;
  Pose2 estimate;
  Cov3 cov = Cov3::Identity();
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  SeededRng resample_rng{0, 0};
};

inline std::uint64_t localizer_stream(std::uint64_t epoch, std::size_t slot) {
  return mix_stream(mix_stream(0x6d636cULL, epoch), slot);
}

inline LocalizerState make_localizer(std::shared_ptr<const MapIndex> map, const Pose2& initial,
                                     const LocalizerParams& params, std::uint64_t seed) {
  if (!map || map->map().empty()) {
    throw std::invalid_argument("make_localizer: map must be non-empty");
  }
  LocalizerState ls;
  ls.map = std::move(map);
  ls.seed = seed;
  ls.resample_rng = SeededRng(seed, mix_stream(0x72657361ULL, 1));
  SeededRng init(seed, mix_stream(0x696e6974ULL, 0));
  for (std::size_t i = 0; i < params.particles; ++i) {
    ls.poses.emplace_back(initial.x() + init.normal(0.0, params.init_spread_xy),
                          initial.y() + init.normal(0.0, params.init_spread_xy),
                          initial.psi() + init.normal(0.0, params.init_spread_psi));
    ls.log_weights.push_back(0.0);
    ls.rngs.emplace_back(seed, localizer_stream(0, i));
  }
  ls.estimate = initial;
  const double sxy = params.init_spread_xy * params.init_spread_xy;
  ls.cov = Vec3(sxy, sxy, params.init_spread_psi * params.init_spread_psi).asDiagonal();
  return ls;
}

// Best gated match of one observation against the frozen map, or nothing.
inline std::optional<double> best_map_log_likelihood(const MapIndex& index, const Pose2& pose,
                                                     const ConeObservation& obs, double gate_threshold,
                                                     double map_sigma) {
  std::optional<double> best;
  const Vec2 point = slam::backproject(pose, obs.range, obs.bearing);
  index.for_each_near(point, slam::kAssociationSearchRadius, [&](std::size_t, const Vec2& cone) {
    const Eigen::Matrix2d Hl = slam::observation_jacobian_landmark(pose, cone);
    const Eigen::Matrix2d S = obs.R + map_sigma * map_sigma * Hl * Hl.transpose();
    const Vec2 nu = slam::observation_innovation(obs, slam::predict_observation(pose, cone));
    const double d2 = nu.dot(S.inverse() * nu);
    if (!(d2 <= gate_threshold)) return;
    const double ll = -0.5 * d2 - std::log(kTwoPi) - 0.5 * std::log(S.determinant());
    if (!best || ll > *best) best = ll;
  });
  return best;
}

// Weighted circular-mean pose and weighted sample covariance.
inline std::pair<Pose2, Cov3> weighted_pose_stats(const std::vector<Pose2>& poses, const std::vector<double>& w) {
  double mx = 0.0, my = 0.0, sc = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    mx += w[i] * poses[i].x();
    my += w[i] * poses[i].y();
    sc += w[i] * std::cos(poses[i].psi());
    ss += w[i] * std::sin(poses[i].psi());
  }
  const Pose2 mean(mx, my, std::atan2(ss, sc));
  Cov3 cov = Cov3::Zero();
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const Vec3 d(poses[i].x() - mean.x(), poses[i].y() - mean.y(), wrap_angle(poses[i].psi() - mean.psi()));
    cov += w[i] * d * d.transpose();
  }
  return {mean, symmetrize(cov)};
}

// Raises each variance to at least the floor; the result is positive definite.
inline Cov3 floor_covariance(Cov3 cov, const Cov3& floor) {
  for (int i = 0; i < 3; ++i) {
    cov(i, i) = std::max(cov(i, i), floor(i, i));
  }
  if (min_eigenvalue(cov) <= 1e-3 * floor.diagonal().minCoeff()) {
    cov += 1e-3 * Cov3(floor.diagonal().asDiagonal());
  }
  return cov;
}

struct MclReport {
  double n_eff = 0.0;
  bool resampled = false;
  std::size_t matched = 0;  // observations matched by the estimate-nearest particle
};

// One Monte-Carlo localization step against the frozen map; emits the
// virtual pose measurement for the EKF.
inline std::pair<LocalizerState, ekf::Measurement> mcl_step(LocalizerState ls, double t, const Pose2& odom,
                                                            double dt,
                                                            const std::vector<ConeObservation>& observations,
                                                            const LocalizerParams& params,
                                                            MclReport* report = nullptr) {
  if (!ls.map || ls.map->map().empty()) {
    throw std::invalid_argument("mcl_step: map must be non-empty");
  }
  if (!(dt > 0.0)) {
    throw std::invalid_argument("mcl_step: dt must be positive");
  }
  const std::size_t n = ls.poses.size();
  const double gate = ekf::chi2_gate(2, params.gate_p);
  const double log_outlier = std::log(params.outlier_prob);

  std::size_t particles_with_match = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ls.poses[i] = slam::sample_motion(ls.poses[i], odom, dt, params.noise_scale, params.motion, ls.rngs[i]);
    bool any = false;
    for (const ConeObservation& obs : observations) {
      const auto ll = best_map_log_likelihood(*ls.map, ls.poses[i], obs, gate, params.map_sigma);
      ls.log_weights[i] += ll ? *ll : log_outlier;
      any = any || ll.has_value();
    }
    particles_with_match += any ? 1 : 0;
  }
  if (!observations.empty() && particles_with_match == 0) {
    throw LocalizationLostError("mcl_step: no particle explains any observation");
  }

  std::vector<double> w;
  try {
    w = slam::normalize_log_weights(ls.log_weights);
  } catch (const std::domain_error& e) {
    throw LocalizationLostError(std::string("mcl_step: ") + e.what());
  }
  auto [mean, cov] = weighted_pose_stats(ls.poses, w);
  ls.estimate = mean;
  ls.cov = floor_covariance(cov, params.min_cov());

  const double n_eff = slam::effective_sample_size(w);
  MclReport rep;
  rep.n_eff = n_eff;
  if (n_eff < 0.5 * static_cast<double>(n)) {
    const auto parents =
        slam::systematic_resample_indices(w, ls.resample_rng.uniform(0.0, 1.0 / static_cast<double>(n)));
    ++ls.epoch;
    std::vector<Pose2> next;
    next.reserve(n);
    for (std::size_t slot = 0; slot < n; ++slot) {
      next.push_back(ls.poses[parents[slot]]);
      ls.rngs[slot] = SeededRng(ls.seed, localizer_stream(ls.epoch, slot));
    }
    ls.poses = std::move(next);
    std::fill(ls.log_weights.begin(), ls.log_weights.end(), 0.0);
    rep.resampled = true;
  } else {
    for (std::size_t i = 0; i < n; ++i) ls.log_weights[i] = std::log(w[i]);
  }
  for (const ConeObservation& obs : observations) {
    rep.matched += best_map_log_likelihood(*ls.map, ls.estimate, obs, gate, params.map_sigma) ? 1 : 0;
  }
  if (report) *report = rep;

  const Cov3 out_cov = ls.cov;
  return {std::move(ls), ekf::Measurement::virtual_pose(t, mean, out_cov)};
}

}  // namespace fsd::localize
