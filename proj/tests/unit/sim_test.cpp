#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "fsd/core/rng.hpp"
#include "fsd/sim/nav_sensors.hpp"
#include "fsd/sim/pure_pursuit.hpp"
#include "fsd/sim/track.hpp"
#include "fsd/sim/vehicle.hpp"
#include "support/oracles.hpp"

namespace fsd::sim {
namespace {

class TrackGeneration : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(TrackGeneration, LengthClosureAndCones) {
  for (double length : {100.0, 300.0, 500.0}) {
    const Track t = generate_track(GetParam(), length, 3.5, 5.0);
    EXPECT_NEAR(t.length(), length, 0.01 * length);
    EXPECT_EQ(t.centerline.front(), t.centerline.back());
    ASSERT_EQ(t.left.size(), t.right.size());
    for (std::size_t k = 0; k < t.left.size(); ++k) {
      const Vec2 mid = 0.5 * (t.left[k] + t.right[k]);
      EXPECT_NEAR((t.left[k] - t.right[k]).norm(), 3.5, 1e-9);
      EXPECT_LT(std::abs(t.project(mid).lateral), 1e-6);
      EXPECT_GT(t.project(t.left[k]).lateral, 0.0);
      EXPECT_LT(t.project(t.right[k]).lateral, 0.0);
      const std::size_t next = (k + 1) % t.left.size();
      EXPECT_LE((t.left[next] - t.left[k]).norm(), 5.0 * 1.5);
    }
    // No cone sits on the driving lane of another part of the track.
    // Tolerance covers the chord sag of the 0.25 m polyline on the inside of curves.
    for (const Vec2& c : t.all_cones()) EXPECT_GT(std::abs(t.project(c).lateral), 0.5 * 3.5 - 0.01);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, TrackGeneration, ::testing::Values(1, 7, 42, 1234));

TEST(Track, DeterministicInSeed) {
  const Track a = generate_track(9, 300, 3.5, 5);
  const Track b = generate_track(9, 300, 3.5, 5);
  const Track c = generate_track(10, 300, 3.5, 5);
  EXPECT_EQ(a.centerline, b.centerline);
  EXPECT_EQ(a.left, b.left);
  EXPECT_NE(a.centerline, c.centerline);
}

TEST(Track, InfeasibleParametersThrow) {
  EXPECT_THROW(generate_track(1, 20.0, 8.0, 5.0), TrackGenerationError);
  EXPECT_THROW(generate_track(1, -1.0, 3.5, 5.0), std::invalid_argument);
}

TEST(Track, ArcLengthQueries) {
  const Track t = generate_track(7, 300, 3.5, 5);
  EXPECT_EQ(t.point_at(0.0), t.centerline.front());
  EXPECT_LT((t.point_at(t.length() + 10.0) - t.point_at(10.0)).norm(), 1e-9);
  const TrackProjection p = t.project(t.point_at(123.0));
  EXPECT_NEAR(p.s, 123.0, 1e-6);
  EXPECT_NEAR(p.lateral, 0.0, 1e-9);
}

TEST(Track, CsvRoundTrip) {
  const Track t = generate_track(7, 200, 3.5, 5);
  const std::string path = ::testing::TempDir() + "fsd_track.csv";
  save_track_csv(t, path);
  const Track back = load_track_csv(path);
  ASSERT_EQ(back.centerline.size(), t.centerline.size());
  for (std::size_t i = 0; i < t.centerline.size(); ++i) EXPECT_LT((back.centerline[i] - t.centerline[i]).norm(), 1e-12);
  EXPECT_EQ(back.left.size(), t.left.size());
  EXPECT_NEAR(back.width, 3.5, 1e-9);
  EXPECT_NEAR(back.length(), t.length(), 1e-9);
}

TEST(Vehicle, ConstantSteeringMatchesRk4Bicycle) {
  const VehicleParams params;
  TruthState s;
  s.vx = 8.0;
  const DriveCommand cmd{8.0, 0.2};
  for (int k = 0; k < 400; ++k) s = step_vehicle(s, cmd, 0.005, params);
  const Eigen::Vector3d ref = oracle::bicycle_rk4(Eigen::Vector3d::Zero(), 8.0, 0.2, params.wheelbase, 2.0, 4000);
  EXPECT_NEAR(s.pose.x(), ref.x(), 1e-6);
  EXPECT_NEAR(s.pose.y(), ref.y(), 1e-6);
  EXPECT_NEAR(wrap_angle(s.pose.psi() - ref.z()), 0.0, 1e-9);
  EXPECT_NEAR(s.r, 8.0 * std::tan(0.2) / params.wheelbase, 1e-12);
  EXPECT_NEAR(s.t, 2.0, 1e-12);
}

TEST(Vehicle, SpeedFollowsFirstOrderLag) {
  const VehicleParams params;
  TruthState s;
  for (int k = 0; k < 200; ++k) s = step_vehicle(s, {10.0, 0.0}, 0.005, params);
  EXPECT_NEAR(s.vx, 10.0 * (1.0 - std::exp(-1.0 / params.speed_tau)), 1e-9);
  EXPECT_NEAR(s.pose.y(), 0.0, 1e-12);
  EXPECT_THROW(step_vehicle(s, {}, 0.0), std::invalid_argument);
}

TEST(Vehicle, SteeringIsClamped) {
  const VehicleParams params;
  TruthState s;
  s.vx = 5.0;
  const TruthState out = step_vehicle(s, {5.0, 2.0}, 0.005, params);
  EXPECT_NEAR(out.r, 5.0 * std::tan(params.max_steer) / params.wheelbase, 1e-12);
}

TEST(PurePursuit, SteersTowardTheCenterline) {
  const Track t = generate_track(7, 300, 3.5, 5);
  const Pose2 start = t.start_pose();
  const Vec2 left_normal(-std::sin(start.psi()), std::cos(start.psi()));
  TruthState s;
  s.vx = 5.0;
  const auto steer_at = [&](double offset) {
    s.pose = Pose2(start.position() + offset * left_normal, start.psi());
    return pure_pursuit(s, t, 0.3, 5.0).steering;
  };
  EXPECT_LT(steer_at(1.0), steer_at(0.0));
  EXPECT_GT(steer_at(-1.0), steer_at(0.0));
  EXPECT_EQ(pure_pursuit(s, t, 0.3, 5.0).speed, 5.0);
}

TEST(PurePursuit, StraightPathExamples) {
  Track line;
  for (int i = 0; i <= 100; ++i) line.centerline.emplace_back(i, 0.0);
  line.rebuild_arc();
  TruthState s;
  s.vx = 5.0;
  s.pose = Pose2(10, 1.0, 0.0);
  EXPECT_LT(pure_pursuit(s, line, 0.3, 5.0).steering, 0.0);
  s.pose = Pose2(10, -1.0, 0.0);
  EXPECT_GT(pure_pursuit(s, line, 0.3, 5.0).steering, 0.0);
  s.pose = Pose2(10, 0.0, 0.0);
  EXPECT_EQ(pure_pursuit(s, line, 0.3, 5.0).steering, 0.0);
  // Lookahead 4 m, target 1 m to the side: delta = atan(2 L sin(alpha) / d).
  s.pose = Pose2(10, 1.0, 0.0);
  const double d = std::hypot(4.0, 1.0);
  EXPECT_NEAR(pure_pursuit(s, line, 0.3, 5.0).steering, std::atan(2 * 1.55 * (-1.0 / d) / d), 1e-3);
}

TEST(PurePursuit, FullLapStaysWithinQuarterWidth) {
  for (std::uint64_t seed : {7u, 11u}) {
    const Track t = generate_track(seed, 300, 3.5, 5);
    for (double speed : {5.0, 15.0}) {
      TruthState s;
      s.pose = t.start_pose();
      s.vx = speed;
      double travelled = 0.0, worst = 0.0;
      while (travelled < t.length()) {
        const TruthState next = step_vehicle(s, pure_pursuit(s, t, 0.3, speed), kTickDt);
        travelled += (next.pose.position() - s.pose.position()).norm();
        s = next;
        worst = std::max(worst, std::abs(t.project(s.pose.position()).lateral));
      }
      EXPECT_LE(worst, 3.5 / 4) << "seed " << seed << " speed " << speed;
    }
  }
}

TruthState moving_truth(double t) {
  TruthState s;
  s.t = t;
  s.pose = Pose2(3, 4, 0.5);
  s.vx = 10.0;
  s.r = 0.2;
  s.ax = 0.3;
  return s;
}

TEST(NavSensors, ZeroNoiseReportsTruth) {
  NavSensorSuite suite(1, NavNoise{0, 0, 0, 0}, WeatherProfile{});
  const TruthState truth = moving_truth(0.0);
  const NavSample sample = suite.sample(0, truth);
  ASSERT_TRUE(sample.imu.has_value());
  EXPECT_EQ(sample.imu->ax, 0.3);
  EXPECT_EQ(sample.imu->ay, 2.0);
  ASSERT_EQ(sample.measurements.size(), 3u);
  EXPECT_EQ(sample.measurements[0].kind, ekf::SensorKind::YawRate);
  EXPECT_EQ(sample.measurements[0].z[0], 0.2);
  EXPECT_EQ(sample.measurements[1].kind, ekf::SensorKind::BodyVelocity);
  EXPECT_EQ(sample.measurements[1].z[0], 10.0);
  EXPECT_EQ(sample.measurements[2].kind, ekf::SensorKind::Gps);
  EXPECT_EQ(sample.measurements[2].z[0], 3.0);
  EXPECT_EQ(sample.measurements[2].z[1], 4.0);
  EXPECT_GT(sample.measurements[2].R(0, 0), 0.0);
}

TEST(NavSensors, ChannelRates) {
  NavSensorSuite suite(1, NavNoise{}, WeatherProfile{});
  int gps = 0, vel = 0, gyro = 0, imu = 0;
  for (std::int64_t tick = 0; tick < 200; ++tick) {
    const NavSample s = suite.sample(tick, moving_truth(tick_time(tick)));
    imu += s.imu ? 1 : 0;
    for (const auto& m : s.measurements) {
      gps += m.kind == ekf::SensorKind::Gps;
      vel += m.kind == ekf::SensorKind::BodyVelocity;
      gyro += m.kind == ekf::SensorKind::YawRate;
    }
  }
  EXPECT_EQ(gps, 10);
  EXPECT_EQ(vel, 50);
  EXPECT_EQ(gyro, 200);
  EXPECT_EQ(imu, 200);
}

TEST(NavSensors, GpsDropoutRate) {
  WeatherProfile weather;
  weather.gps_dropout = 0.3;
  NavSensorSuite suite(2, NavNoise{}, weather, NavEnable{true, false, false, false});
  int fixes = 0;
  const int n = 5000;
  for (int k = 0; k < n; ++k) fixes += static_cast<int>(suite.sample(20 * k, moving_truth(0.1 * k)).measurements.size());
  EXPECT_NEAR(static_cast<double>(fixes) / n, 0.7, 4 * std::sqrt(0.21 / n));
}

TEST(NavSensors, GpsBiasRampsThenHolds) {
  WeatherProfile weather;
  weather.gps_bias_rate = 0.5;
  weather.gps_bias_start = 30.0;
  weather.gps_bias_duration = 10.0;
  weather.gps_bias_heading = kPi / 2;
  EXPECT_EQ(weather.gps_bias(29.0), Vec2::Zero());
  EXPECT_NEAR(weather.gps_bias(35.0).y(), 2.5, 1e-12);
  EXPECT_NEAR(weather.gps_bias(40.0).norm(), 5.0, 1e-12);
  EXPECT_NEAR(weather.gps_bias(100.0).norm(), 5.0, 1e-12);

  NavSensorSuite suite(3, NavNoise{0, 0, 0, 0}, weather, NavEnable{true, false, false, false});
  const auto m = suite.sample(0, moving_truth(45.0)).measurements.at(0);
  EXPECT_NEAR(m.z[0], 3.0, 1e-12);
  EXPECT_NEAR(m.z[1], 9.0, 1e-12);
}

TEST(NavSensors, NoiseStatistics) {
  const NavNoise noise;
  NavSensorSuite suite(4, noise, WeatherProfile{}, NavEnable{true, false, false, false});
  double sum2 = 0.0;
  const int n = 5000;
  for (int k = 0; k < n; ++k) {
    const auto m = suite.sample(0, moving_truth(0.0)).measurements.at(0);
    sum2 += (m.z.head<2>() - Vec2(3, 4)).squaredNorm();
  }
  EXPECT_NEAR(std::sqrt(sum2 / (2 * n)), noise.gps, 0.03 * noise.gps);
}

}  // namespace
}  // namespace fsd::sim
