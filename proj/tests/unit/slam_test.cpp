#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "fsd/core/rng.hpp"
#include "fsd/slam/fastslam.hpp"
#include "fsd/slam/loop_closure.hpp"
#include "support/oracles.hpp"

namespace fsd::slam {
namespace {

ConeObservation observation(double range, double bearing, double sr = 0.1, double sb = 0.0175) {
  ConeObservation o;
  o.range = range;
  o.bearing = bearing;
  o.R = Vec2(sr * sr, sb * sb).asDiagonal();
  return o;
}

Pose2 random_pose(SeededRng& rng) { return {rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-kPi, kPi)}; }

TEST(ObservationModel, Examples) {
  const Vec2 z = predict_observation(Pose2(0, 0, 0), Vec2(3, 4));
  EXPECT_DOUBLE_EQ(z.x(), 5.0);
  EXPECT_DOUBLE_EQ(z.y(), std::atan2(4.0, 3.0));
  const Vec2 behind = predict_observation(Pose2(1, 1, kPi / 2), Vec2(1, -1));
  EXPECT_NEAR(behind.x(), 2.0, 1e-15);
  EXPECT_NEAR(std::abs(behind.y()), kPi, 1e-12);
}

TEST(ObservationModel, BackprojectInvertsPrediction) {
  SeededRng rng(3, 0);
  for (int k = 0; k < 1000; ++k) {
    const Pose2 pose = random_pose(rng);
    const Vec2 lm = pose.position() + Vec2(rng.uniform(-10, 10), rng.uniform(-10, 10));
    const Vec2 z = predict_observation(pose, lm);
    EXPECT_LT((backproject(pose, z.x(), z.y()) - lm).norm(), 1e-9);
  }
}

TEST(ObservationModel, JacobiansMatchFiniteDifferences) {
  SeededRng rng(5, 0);
  const auto wrap_second = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) -> Eigen::VectorXd {
    Eigen::VectorXd d = a - b;
    d[1] = oracle::wrap(d[1]);
    return d;
  };
  for (int k = 0; k < 200; ++k) {
    const Pose2 pose = random_pose(rng);
    const double range = rng.uniform(1, 10), angle = rng.uniform(-kPi, kPi);
    const Vec2 lm = pose.position() + range * Vec2(std::cos(angle), std::sin(angle));
    const auto h_lm = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return predict_observation(pose, Vec2(v)); };
    EXPECT_LT(oracle::relative_error(observation_jacobian_landmark(pose, lm), oracle::jacobian(h_lm, lm, 1e-6, wrap_second)),
              1e-6);
    const auto h_pose = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      return predict_observation(Pose2(v[0], v[1], v[2]), lm);
    };
    const Vec3 p(pose.x(), pose.y(), pose.psi());
    EXPECT_LT(oracle::relative_error(observation_jacobian_pose(pose, lm), oracle::jacobian(h_pose, p, 1e-6, wrap_second)),
              1e-6);
    const double r = rng.uniform(1, 10), b = rng.uniform(-kPi, kPi);
    const auto g = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return backproject(pose, v[0], v[1]); };
    EXPECT_LT(oracle::relative_error(backproject_jacobian(pose, r, b), oracle::jacobian(g, Vec2(r, b))), 1e-6);
  }
}

TEST(ObservationModel, MapLikelihoodGradientMatchesFiniteDifferences) {
  SeededRng rng(7, 0);
  for (int k = 0; k < 200; ++k) {
    const Pose2 pose = random_pose(rng);
    const Vec2 cone = pose.position() + Vec2(rng.uniform(2, 10), rng.uniform(-5, 5));
    const Vec2 z = predict_observation(pose, cone);
    const ConeObservation obs = observation(z.x() + rng.normal(0, 0.1), z.y() + rng.normal(0, 0.02));
    const auto f = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      return Eigen::VectorXd::Constant(1, map_log_likelihood(Pose2(v[0], v[1], v[2]), obs, cone, 0.05));
    };
    const Eigen::MatrixXd fd = oracle::jacobian(f, Vec3(pose.x(), pose.y(), pose.psi()));
    const Vec3 g = map_log_likelihood_gradient(pose, obs, cone, 0.05);
    EXPECT_LT(oracle::relative_error(g.transpose(), fd), 1e-5);
  }
}

TEST(Landmark, InitCovarianceMatchesMonteCarlo) {
  const Pose2 pose(2, -1, 0.3);
  const ConeObservation obs = observation(8.0, 0.4, 0.13, 0.0175);
  const Landmark lm = landmark_init(pose, obs);
  EXPECT_LT((lm.mu - backproject(pose, 8.0, 0.4)).norm(), 1e-12);
  EXPECT_EQ(lm.hits, 1);

  SeededRng rng(11, 0);
  const int n = 100000;
  std::vector<Vec2> pts;
  Vec2 mean = Vec2::Zero();
  for (int i = 0; i < n; ++i) {
    pts.push_back(backproject(pose, 8.0 + rng.normal(0, 0.13), 0.4 + rng.normal(0, 0.0175)));
    mean += pts.back();
  }
  mean /= n;
  Cov2 cov = Cov2::Zero();
  for (const Vec2& p : pts) cov += (p - mean) * (p - mean).transpose();
  cov /= n - 1;
  const Eigen::SelfAdjointEigenSolver<Cov2> a(lm.Sigma), b(cov);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(a.eigenvalues()[i] / b.eigenvalues()[i], 1.0, 0.15);
}

TEST(Landmark, UpdateShrinksCovarianceAndCountsHits) {
  const Pose2 pose(0, 0, 0);
  Landmark lm = landmark_init(pose, observation(5.0, 0.1));
  const Landmark up = landmark_update(lm, observation(5.2, 0.1), pose);
  EXPECT_EQ(up.hits, 2);
  EXPECT_LT(up.Sigma.trace(), lm.Sigma.trace());
  EXPECT_GT(predict_observation(pose, up.mu).x(), 5.0);
  EXPECT_LT(predict_observation(pose, up.mu).x(), 5.2);
  // Identical Gaussian evidence: the range moves halfway.
  EXPECT_NEAR(predict_observation(pose, up.mu).x(), 5.1, 2e-3);
}

TEST(Landmark, RepeatedUpdatesConverge) {
  SeededRng rng(13, 0);
  const Vec2 truth(6, 2);
  Landmark lm;
  for (int k = 0; k < 200; ++k) {
    const Pose2 pose(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-0.5, 0.5));
    const Vec2 z = predict_observation(pose, truth);
    const ConeObservation obs = observation(z.x() + rng.normal(0, 0.1), z.y() + rng.normal(0, 0.0175));
    lm = k == 0 ? landmark_init(pose, obs) : landmark_update(lm, obs, pose);
    ASSERT_GE(min_eigenvalue(lm.Sigma), 0.0);
  }
  EXPECT_LT((lm.mu - truth).norm(), 0.05);
}

TEST(Association, PicksNearestGatedLandmarkOrNew) {
  const Pose2 pose(0, 0, 0);
  std::vector<Landmark> lms = {landmark_init(pose, observation(5, 0.0)), landmark_init(pose, observation(5, 0.3))};
  const double gate = ekf::chi2_gate(2, 0.99);
  const Association a = associate_gated(lms, pose, observation(5.05, 0.29), gate);
  EXPECT_FALSE(a.is_new());
  EXPECT_EQ(a.landmark, 1u);
  EXPECT_LE(a.d2, gate);
  EXPECT_TRUE(associate_gated(lms, pose, observation(5.0, 0.15), gate).is_new());
  EXPECT_TRUE(associate_gated({}, pose, observation(5.0, 0.0), gate).is_new());
}

TEST(WeighAndUpdate, NewAndExistingContributions) {
  Particle p;
  const double p0 = 1e-4;
  p = weigh_and_update(std::move(p), {observation(5, 0.0), observation(7, 1.0)}, 0.99, p0);
  ASSERT_EQ(p.landmarks.size(), 2u);
  EXPECT_NEAR(p.log_weight, 2 * std::log(p0), 1e-12);

  const double before = p.log_weight;
  const ConeObservation again = observation(5.01, 0.001);
  const Association a = associate(p, again, 0.99);
  ASSERT_FALSE(a.is_new());
  p = weigh_and_update(std::move(p), {again}, 0.99, p0);
  EXPECT_EQ(p.landmarks.size(), 2u);
  EXPECT_NEAR(p.log_weight - before, a.log_likelihood, 1e-12);
  EXPECT_EQ(p.landmarks[a.landmark].hits, 2);
}

TEST(WeighAndUpdate, InvariantToObservationOrder) {
  SeededRng rng(17, 0);
  std::vector<ConeObservation> obs;
  for (int i = 0; i < 8; ++i) obs.push_back(observation(rng.uniform(2, 10), rng.uniform(-kPi, kPi)));
  const Particle a = weigh_and_update(Particle{}, obs, 0.99, 1e-4);
  std::reverse(obs.begin(), obs.end());
  const Particle b = weigh_and_update(Particle{}, obs, 0.99, 1e-4);
  ASSERT_EQ(a.landmarks.size(), b.landmarks.size());
  EXPECT_EQ(a.log_weight, b.log_weight);
  for (std::size_t i = 0; i < a.landmarks.size(); ++i) EXPECT_EQ(a.landmarks[i].mu, b.landmarks[i].mu);
}

TEST(Resampling, UniformAndDegenerateWeights) {
  const std::vector<double> uniform(10, 0.1);
  std::vector<std::size_t> identity(10);
  std::iota(identity.begin(), identity.end(), 0);
  EXPECT_EQ(systematic_resample_indices(uniform, 0.05), identity);

  std::vector<double> degenerate(10, 0.0);
  degenerate[6] = 1.0;
  EXPECT_EQ(systematic_resample_indices(degenerate, 0.03), std::vector<std::size_t>(10, 6));
}

TEST(Resampling, OffspringCountsWithinOneOfExpectation) {
  SeededRng rng(19, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform(2, 300));
    std::vector<double> w(n);
    for (double& x : w) x = std::pow(rng.uniform(), 3.0);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= total;
    const auto parents = systematic_resample_indices(w, rng.uniform(0.0, 1.0 / static_cast<double>(n)));
    ASSERT_EQ(parents.size(), n);
    ASSERT_TRUE(std::is_sorted(parents.begin(), parents.end()));
    std::vector<std::size_t> count(n, 0);
    for (std::size_t p : parents) ++count[p];
    for (std::size_t i = 0; i < n; ++i) {
      const double expected = static_cast<double>(n) * w[i];
      ASSERT_LE(std::abs(static_cast<double>(count[i]) - expected), 1.0 + 1e-9) << "trial " << trial << " i " << i;
    }
  }
}

TEST(Resampling, TriggeredOnlyBelowHalfEffectiveSize) {
  ParticleSet ps = make_particle_set(100, Pose2(), 3);
  ResampleReport report;
  ps = resample(std::move(ps), &report);
  EXPECT_FALSE(report.resampled);
  EXPECT_NEAR(report.n_eff, 100.0, 1e-9);
  EXPECT_EQ(ps.epoch, 0u);

  for (std::size_t i = 0; i < ps.size(); ++i) ps.particles[i].log_weight = i == 42 ? 0.0 : -50.0;
  ps.particles[42].pose = Pose2(1, 2, 0.3);
  ps = resample(std::move(ps), &report);
  EXPECT_TRUE(report.resampled);
  EXPECT_EQ(ps.epoch, 1u);
  for (const Particle& p : ps.particles) {
    EXPECT_EQ(p.pose, Pose2(1, 2, 0.3));
    EXPECT_EQ(p.log_weight, 0.0);
  }
  // Duplicates receive distinct streams.
  EXPECT_NE(ps.particles[0].rng.normal(), ps.particles[1].rng.normal());
}

TEST(Resampling, NormalizeRejectsUnusableWeights) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(normalize_log_weights(std::vector<double>{-inf, -inf}), std::domain_error);
  EXPECT_THROW(normalize_log_weights(std::vector<double>{0.0, std::nan("")}), std::domain_error);
  const auto w = normalize_log_weights(std::vector<double>{-1000.0, -1000.0 + std::log(3.0)});
  EXPECT_NEAR(w[0], 0.25, 1e-12);
  EXPECT_NEAR(w[1], 0.75, 1e-12);
}

TEST(MotionModel, ZeroNoiseComposesExactly) {
  ParticleSet ps = make_particle_set(5, Pose2(1, 1, kPi / 2), 1);
  ps = pf_predict(std::move(ps), Pose2(2, 0, 0.1), 0.1, 0.0);
  for (const Particle& p : ps.particles) {
    EXPECT_NEAR(p.pose.x(), 1.0, 1e-12);
    EXPECT_NEAR(p.pose.y(), 3.0, 1e-12);
    EXPECT_NEAR(p.pose.psi(), kPi / 2 + 0.1, 1e-12);
  }
  EXPECT_THROW(pf_predict(std::move(ps), Pose2(), 0.0, 1.0), std::invalid_argument);
}

TEST(MotionModel, SampleSpreadMatchesNoiseModel) {
  const MotionNoise noise;
  const Pose2 odom(1.5, 0.0, 0.05);
  const double dt = 0.1;
  ParticleSet ps = make_particle_set(20000, Pose2(), 9);
  ps = pf_predict(std::move(ps), odom, dt, 1.0, noise);
  double sx = 0, sxx = 0, sp = 0, spp = 0;
  for (const Particle& p : ps.particles) {
    sx += p.pose.x();
    sxx += p.pose.x() * p.pose.x();
    sp += p.pose.psi();
    spp += p.pose.psi() * p.pose.psi();
  }
  const double n = static_cast<double>(ps.size());
  const double sd_x = std::sqrt(sxx / n - (sx / n) * (sx / n));
  const double sd_psi = std::sqrt(spp / n - (sp / n) * (sp / n));
  const double want_trans = noise.trans_per_m * 1.5 + noise.trans_per_sqrt_s * std::sqrt(dt);
  const double want_rot = noise.rot_per_rad * 0.05 + noise.rot_per_m * 1.5 + noise.rot_per_sqrt_s * std::sqrt(dt);
  EXPECT_NEAR(sx / n, 1.5, 5 * want_trans / std::sqrt(n));
  EXPECT_NEAR(sd_x / want_trans, 1.0, 0.03);
  EXPECT_NEAR(sd_psi / want_rot, 1.0, 0.03);
}

TEST(ConeMapExtraction, FiltersByHitsAndMerges) {
  ParticleSet ps = make_particle_set(2, Pose2(), 1);
  Landmark a, b, c, d;
  a.mu = Vec2(0, 0);
  a.hits = 3;
  b.mu = Vec2(0.3, 0);
  b.hits = 3;
  c.mu = Vec2(0.2, 0);
  c.hits = 1;  // below min_hits
  d.mu = Vec2(5, 5);
  d.hits = 4;
  ps.particles[1].landmarks = {a, b, c, d};
  ps.particles[1].log_weight = 1.0;
  const ConeMap map = extract_map(ps, 2, 0.5);
  EXPECT_EQ(map.source, 1u);
  ASSERT_EQ(map.size(), 2u);
  EXPECT_LT((map.cones[0] - Vec2(0.15, 0)).norm(), 1e-12);
  EXPECT_EQ(map.hits[0], 6);
  EXPECT_EQ(map.cones[1], Vec2(5, 5));
}

TEST(ConeMapExtraction, CsvRoundTrip) {
  ConeMap map;
  map.cones = {{1.25, -3.5}, {0.1, 1e-3}};
  map.hits = {4, 7};
  const std::string path = ::testing::TempDir() + "fsd_map.csv";
  save_map_csv(map, path);
  const ConeMap back = load_map_csv(path);
  EXPECT_EQ(back.cones, map.cones);
  EXPECT_EQ(back.hits, map.hits);
}

TEST(LoopClosure, Examples) {
  const Pose2 start(0, 0, 0);
  std::vector<Pose2> path;
  const double radius = 10.0;
  for (int k = 0; k <= 360; ++k) {
    const double a = deg_to_rad(k);
    path.emplace_back(radius * std::sin(a), radius * (1 - std::cos(a)), a);
  }
  const std::span<const Pose2> full(path);
  EXPECT_TRUE(detect_loop_closure(full, start));
  EXPECT_FALSE(detect_loop_closure(full.first(10), start));
  // Near the start but facing the other way.
  std::vector<Pose2> reversed = path;
  reversed.back() = Pose2(0.5, 0, kPi);
  EXPECT_FALSE(detect_loop_closure(std::span<const Pose2>(reversed), start));
  EXPECT_FALSE(detect_loop_closure(std::span<const Pose2>(), start));
  EXPECT_NEAR(path_length(full), 2 * kPi * radius, 0.01);
}

struct RingWorld {
  std::vector<Vec2> cones;
  std::vector<Pose2> poses;
};

RingWorld ring_world() {
  RingWorld w;
  for (int k = 0; k < 24; ++k) {
    const double a = kTwoPi * k / 24;
    w.cones.emplace_back(12 * std::cos(a), 12 * std::sin(a));
    w.cones.emplace_back(18 * std::cos(a), 18 * std::sin(a));
  }
  for (int k = 0; k <= 190; ++k) {
    const double a = kTwoPi * k / 180;
    w.poses.emplace_back(15 * std::cos(a), 15 * std::sin(a), a + kPi / 2);
  }
  return w;
}

std::vector<ConeObservation> observe(const RingWorld& w, const Pose2& pose, SeededRng& rng) {
  std::vector<ConeObservation> out;
  for (const Vec2& c : w.cones) {
    const Vec2 z = predict_observation(pose, c);
    if (z.x() > 10.0) continue;
    out.push_back(observation(z.x() + rng.normal(0, 0.05), wrap_angle(z.y() + rng.normal(0, 0.01)), 0.05, 0.01));
  }
  return out;
}

TEST(FastSlam, MapsARingOfCones) {
  const RingWorld w = ring_world();
  SlamParams params;
  params.particles = 50;
  FastSlam slam(params, w.poses.front(), 5);
  SeededRng rng(21, 0);
  for (std::size_t k = 1; k < w.poses.size(); ++k) {
    const Pose2 odom = pose_between(w.poses[k - 1], w.poses[k]);
    slam.step(odom, 0.1, observe(w, w.poses[k], rng));
  }
  const ConeMap map = slam.extract();
  std::size_t matched = 0;
  double sum2 = 0;
  for (const Vec2& c : w.cones) {
    double best = 1e9;
    for (const Vec2& m : map.cones) best = std::min(best, (m - c).norm());
    if (best < 1.0) {
      ++matched;
      sum2 += best * best;
    }
  }
  EXPECT_EQ(map.size(), w.cones.size());
  EXPECT_EQ(matched, w.cones.size());
  EXPECT_LT(std::sqrt(sum2 / static_cast<double>(matched)), 0.3);
}

TEST(FastSlam, DeterministicPerSeed) {
  const RingWorld w = ring_world();
  SlamParams params;
  params.particles = 30;
  const auto run = [&](std::uint64_t seed) {
    FastSlam slam(params, w.poses.front(), seed);
    SeededRng rng(23, 0);
    for (std::size_t k = 1; k < 40; ++k) {
      slam.step(pose_between(w.poses[k - 1], w.poses[k]), 0.1, observe(w, w.poses[k], rng));
    }
    std::vector<double> out;
    for (const Particle& p : slam.particles().particles) {
      out.insert(out.end(), {p.pose.x(), p.pose.y(), p.pose.psi(), p.log_weight});
      for (const Landmark& lm : p.landmarks) out.insert(out.end(), {lm.mu.x(), lm.mu.y()});
    }
    return out;
  };
  EXPECT_EQ(run(1), run(1));
  EXPECT_NE(run(1), run(2));
}

TEST(FastSlam, PositionPriorIsGaussianLogDensity) {
  PositionPrior prior;
  prior.position = Vec2(1, 2);
  prior.cov = Vec2(0.04, 0.09).asDiagonal();
  const Pose2 pose(1.2, 1.7, 0.0);
  const double expected = -0.5 * (0.04 / 0.04 + 0.09 / 0.09) - std::log(2 * oracle::kPi * 0.2 * 0.3);
  EXPECT_NEAR(position_prior_log_likelihood(pose, prior), expected, 1e-12);
}

}  // namespace
}  // namespace fsd::slam
