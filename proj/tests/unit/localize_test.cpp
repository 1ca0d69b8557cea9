#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "fsd/core/rng.hpp"
#include "fsd/localize/mcl.hpp"
#include "fsd/sim/track.hpp"

namespace fsd::localize {
namespace {

struct World {
  sim::Track track = sim::generate_track(7, 300.0, 3.5, 5.0);
  std::shared_ptr<const MapIndex> index;

  World() {
    ConeMap map;
    for (const Vec2& c : track.all_cones()) {
      map.cones.push_back(c);
      map.hits.push_back(5);
    }
    index = std::make_shared<const MapIndex>(map);
  }

  Pose2 pose_at(double s) const { return {track.point_at(s), track.heading_at(s)}; }
};

const World& world() {
  static const World w;
  return w;
}

std::vector<ConeObservation> observe(const Pose2& pose, SeededRng* rng, double sr = 0.08, double sb = 0.0175) {
  std::vector<ConeObservation> out;
  for (const Vec2& c : world().index->map().cones) {
    Vec2 z = slam::predict_observation(pose, c);
    if (z.x() > 10.0) continue;
    if (rng) z += Vec2(rng->normal(0, sr), rng->normal(0, sb));
    ConeObservation o;
    o.range = z.x();
    o.bearing = wrap_angle(z.y());
    o.R = Vec2(sr * sr, sb * sb).asDiagonal();
    out.push_back(o);
  }
  return out;
}

TEST(MapIndex, NeighbourQueryMatchesLinearScan) {
  SeededRng rng(3, 0);
  const auto& idx = *world().index;
  for (int k = 0; k < 200; ++k) {
    const Vec2 p(rng.uniform(-80, 80), rng.uniform(-80, 80));
    std::vector<std::size_t> seen;
    idx.for_each_near(p, 3.0, [&](std::size_t i, const Vec2&) { seen.push_back(i); });
    for (std::size_t i = 0; i < idx.map().size(); ++i) {
      if ((idx.map().cones[i] - p).norm() <= 3.0) {
        EXPECT_NE(std::find(seen.begin(), seen.end(), i), seen.end());
      }
    }
  }
}

TEST(Mcl, RequiresNonEmptyMap) {
  EXPECT_THROW(make_localizer(std::make_shared<const MapIndex>(ConeMap{}), Pose2(), {}, 1), std::invalid_argument);
}

TEST(Mcl, PerfectStartStaysOnTruthWithFlooredCovariance) {
  LocalizerParams params;
  params.init_spread_xy = 0.0;
  params.init_spread_psi = 0.0;
  params.noise_scale = 0.0;
  const Pose2 pose = world().pose_at(40.0);
  auto ls = make_localizer(world().index, pose, params, 1);
  auto [next, vp] = mcl_step(std::move(ls), 0.1, Pose2(), 0.1, observe(pose, nullptr), params);
  EXPECT_LT((vp.z.head<2>() - pose.position()).norm(), 1e-9);
  EXPECT_NEAR(wrap_angle(vp.z[2] - pose.psi()), 0.0, 1e-9);
  const Cov3 floor = params.min_cov();
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(vp.R(i, i), floor(i, i), 1e-3 * floor(i, i));
}

TEST(Mcl, NoObservationsPropagatesAndGrowsCovariance) {
  const LocalizerParams params;
  const Pose2 pose = world().pose_at(0.0);
  auto ls = make_localizer(world().index, pose, params, 2);
  const double before = ls.cov(0, 0) + ls.cov(1, 1);
  const Pose2 odom(1.5, 0.0, 0.0);
  for (int k = 0; k < 5; ++k) std::tie(ls, std::ignore) = mcl_step(std::move(ls), 0.1 * (k + 1), odom, 0.1, {}, params);
  EXPECT_GT(ls.cov(0, 0) + ls.cov(1, 1), before);
  EXPECT_LT((ls.estimate.position() - pose_compose(pose, Pose2(7.5, 0, 0)).position()).norm(), 0.5);
}

TEST(Mcl, ConvergesFromHalfMetreSpreadWithinTenSteps) {
  int converged = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    SeededRng rng(100 + trial, 0);
    LocalizerParams params;
    params.init_spread_xy = 0.5;
    params.init_spread_psi = 0.05;
    const double speed = 5.0, dt = 0.1;
    double s = rng.uniform(0.0, world().track.length());
    Pose2 truth = world().pose_at(s);
    const Pose2 guess(truth.x() + rng.normal(0, 0.5), truth.y() + rng.normal(0, 0.5), truth.psi());
    auto ls = make_localizer(world().index, guess, params, static_cast<std::uint64_t>(trial + 1));
    ekf::Measurement vp;
    for (int k = 0; k < 10; ++k) {
      s += speed * dt;
      const Pose2 next = world().pose_at(s);
      std::tie(ls, vp) = mcl_step(std::move(ls), dt * (k + 1), pose_between(truth, next), dt, observe(next, &rng), params);
      truth = next;
    }
    converged += (vp.z.head<2>() - truth.position()).norm() <= 0.1 ? 1 : 0;
  }
  EXPECT_GE(converged, trials - 1);
}

TEST(Mcl, MapNeverModified) {
  const LocalizerParams params;
  const Pose2 pose = world().pose_at(10.0);
  SeededRng rng(5, 0);
  auto ls = make_localizer(world().index, pose, params, 3);
  const std::vector<Vec2> before = ls.map->map().cones;
  for (int k = 0; k < 5; ++k) std::tie(ls, std::ignore) = mcl_step(std::move(ls), 0.1, Pose2(), 0.1, observe(pose, &rng), params);
  EXPECT_EQ(ls.map->map().cones, before);
  EXPECT_EQ(ls.map.get(), world().index.get());
}

TEST(Mcl, TruePoseHasHighestLikelihood) {
  const LocalizerParams params;
  const Pose2 pose = world().pose_at(120.0);
  const auto obs = observe(pose, nullptr);
  const double gate = ekf::chi2_gate(2, params.gate_p);
  const auto score = [&](const Pose2& p) {
    double ll = 0.0;
    for (const auto& o : obs) {
      const auto b = best_map_log_likelihood(*world().index, p, o, gate, params.map_sigma);
      ll += b ? *b : std::log(params.outlier_prob);
    }
    return ll;
  };
  const double at_truth = score(pose);
  SeededRng rng(7, 0);
  for (int k = 0; k < 200; ++k) {
    const Pose2 other(pose.x() + rng.normal(0, 0.3), pose.y() + rng.normal(0, 0.3), pose.psi() + rng.normal(0, 0.05));
    EXPECT_GE(at_truth, score(other));
  }
}

TEST(Mcl, LossWhenNothingMatches) {
  LocalizerParams params;
  auto ls = make_localizer(world().index, Pose2(500, 500, 0), params, 4);
  ConeObservation o;
  o.range = 5.0;
  o.R = Vec2(0.01, 0.0003).asDiagonal();
  EXPECT_THROW(mcl_step(std::move(ls), 0.1, Pose2(), 0.1, {o}, params), LocalizationLostError);
}

TEST(Mcl, CovarianceFloorIsPositiveDefinite) {
  const LocalizerParams params;
  const Cov3 floored = floor_covariance(Cov3::Zero(), params.min_cov());
  EXPECT_GT(min_eigenvalue(floored), 0.0);
  Cov3 big = Cov3::Identity();
  EXPECT_EQ(floor_covariance(big, params.min_cov()), big);
}

TEST(Mcl, DeterministicPerSeed) {
  const LocalizerParams params;
  const auto run = [&](std::uint64_t seed) {
    SeededRng rng(9, 0);
    const Pose2 pose = world().pose_at(60.0);
    auto ls = make_localizer(world().index, pose, params, seed);
    ekf::Measurement vp;
    for (int k = 0; k < 5; ++k) std::tie(ls, vp) = mcl_step(std::move(ls), 0.1, Pose2(), 0.1, observe(pose, &rng), params);
    return std::vector<double>(vp.z.data(), vp.z.data() + vp.z.size());
  };
  EXPECT_EQ(run(1), run(1));
  EXPECT_NE(run(1), run(2));
}

}  // namespace
}  // namespace fsd::localize
