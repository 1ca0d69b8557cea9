#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fsd/core/rng.hpp"
#include "fsd/ekf/types.hpp"
#include "fsd/sim/vehicle.hpp"
#include "fsd/sim/weather.hpp"

namespace fsd::sim {

inline constexpr double kBaseRate = 200.0;  // Hz, simulator tick
inline constexpr double kTickDt = 1.0 / kBaseRate;

inline double tick_time(std::int64_t tick) { return static_cast<double>(tick) / kBaseRate; }

struct NavNoise {
  double gps = 0.15;    // m
  double velocity = 0.05;  // m/s
  double gyro = 0.01;   // rad/s
  double accel = 0.05;  // m/s^2

  // Noise reported to the filter. A perfect sensor still needs a positive definite R.
  static double declared(double sigma) { return sigma > 1e-3 ? sigma : 1e-3; }
};

struct NavEnable {
  bool gps = true;
  bool velocity = true;
  bool gyro = true;
  bool imu = true;
};

// Tick divisors relative to the 200 Hz base rate.
struct NavRates {
  int gps = 20;       // 10 Hz
  int velocity = 4;   // 50 Hz
  int gyro = 1;       // 200 Hz
  int imu = 1;        // 200 Hz
};

struct NavSample {
  std::optional<ekf::ImuInput> imu;
  std::vector<ekf::Measurement> measurements;  // gyro, velocity, gps order
};

// Velocity sensor, INS (IMU + GPS). Each channel draws from its own stream.
class NavSensorSuite {
 public:
  NavSensorSuite(std::uint64_t seed, NavNoise noise, WeatherProfile weather, NavEnable enable = {},
                 NavRates rates = {})
      : noise_(noise),
        weather_(weather),
        enable_(enable),
        rates_(rates),
        gps_rng_(seed, 10),
        dropout_rng_(seed, 11),
        velocity_rng_(seed, 12),
        gyro_rng_(seed, 13),
        imu_rng_(seed, 14) {}

  NavSample sample(std::int64_t tick, const TruthState& truth) {
    NavSample out;
    const double t = truth.t;
    if (enable_.imu && tick % rates_.imu == 0) {
      out.imu = ekf::ImuInput{t, truth.ax + imu_rng_.normal(0.0, noise_.accel),
                              truth.r * truth.vx + imu_rng_.normal(0.0, noise_.accel)};
    }
    if (enable_.gyro && tick % rates_.gyro == 0) {
      out.measurements.push_back(ekf::Measurement::yaw_rate(t, truth.r + gyro_rng_.normal(0.0, noise_.gyro),
                                                            NavNoise::declared(noise_.gyro)));
    }
    if (enable_.velocity && tick % rates_.velocity == 0) {
      out.measurements.push_back(ekf::Measurement::body_velocity(
          t, truth.vx + velocity_rng_.normal(0.0, noise_.velocity),
          truth.vy + velocity_rng_.normal(0.0, noise_.velocity), NavNoise::declared(noise_.velocity)));
    }
    if (enable_.gps && tick % rates_.gps == 0) {
      const bool lost = dropout_rng_.bernoulli(weather_.gps_dropout);
      const Vec2 noise(gps_rng_.normal(0.0, noise_.gps), gps_rng_.normal(0.0, noise_.gps));
      if (!lost) {
        const Vec2 fix = truth.pose.position() + weather_.gps_bias(t) + noise;
        out.measurements.push_back(ekf::Measurement::gps(t, fix, NavNoise::declared(noise_.gps)));
      }
    }
    return out;
  }

 private:
  NavNoise noise_;
  WeatherProfile weather_;
  NavEnable enable_;
  NavRates rates_;
  SeededRng gps_rng_;
  SeededRng dropout_rng_;
  SeededRng velocity_rng_;
  SeededRng gyro_rng_;
  SeededRng imu_rng_;
};

}  // namespace fsd::sim
