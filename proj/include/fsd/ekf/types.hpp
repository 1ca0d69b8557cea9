#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string_view>

#include <Eigen/Core>

#include "fsd/core/covariance.hpp"
#include "fsd/core/pose2.hpp"

namespace fsd::ekf {

using StateVec = Eigen::Matrix<double, 6, 1>;

// State layout: [px, py, psi, vx, vy, r]; velocities are body frame.
enum StateIndex : Eigen::Index { kPx = 0, kPy = 1, kPsi = 2, kVx = 3, kVy = 4, kYawRate = 5 };

struct VehicleState {
  double t = 0.0;
  StateVec x = StateVec::Zero();
  Cov6 P = Cov6::Identity();

  Pose2 pose() const { return {x[kPx], x[kPy], x[kPsi]}; }
};

struct ImuInput {
  double t = 0.0;
  double ax = 0.0;  // body longitudinal, m/s^2
  double ay = 0.0;  // body lateral, m/s^2
};

enum class SensorKind : std::size_t { Gps = 0, BodyVelocity = 1, YawRate = 2, VirtualPose = 3 };
inline constexpr std::size_t kSensorKindCount = 4;
inline constexpr std::array<SensorKind, kSensorKindCount> kAllSensorKinds = {
    SensorKind::Gps, SensorKind::BodyVelocity, SensorKind::YawRate, SensorKind::VirtualPose};

inline constexpr std::string_view sensor_name(SensorKind kind) {
  switch (kind) {
    case SensorKind::Gps: return "gps";
    case SensorKind::BodyVelocity: return "velocity";
    case SensorKind::YawRate: return "gyro";
    case SensorKind::VirtualPose: return "virtual_pose";
  }
  return "unknown";
}

inline constexpr int sensor_dof(SensorKind kind) {
  switch (kind) {
    case SensorKind::Gps: return 2;
    case SensorKind::BodyVelocity: return 2;
    case SensorKind::YawRate: return 1;
    case SensorKind::VirtualPose: return 3;
  }
  return 0;
}

inline constexpr bool is_position_sensor(SensorKind kind) {
  return kind == SensorKind::Gps || kind == SensorKind::VirtualPose;
}

// Small fixed-capacity vectors/matrices for 1..3 dimensional measurements.
using MeasVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using MeasCov = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using MeasJacobian = Eigen::Matrix<double, Eigen::Dynamic, 6, 0, 3, 6>;
using GainMatrix = Eigen::Matrix<double, 6, Eigen::Dynamic, 0, 6, 3>;

struct Measurement {
  double t = 0.0;
  SensorKind kind = SensorKind::Gps;
  MeasVec z;
  MeasCov R;

  int dof() const { return sensor_dof(kind); }

  static Measurement gps(double t, const Vec2& p, double sigma) {
    return make(t, SensorKind::Gps, vec({p.x(), p.y()}), isotropic(2, sigma));
  }
  static Measurement body_velocity(double t, double vx, double vy, double sigma) {
    return make(t, SensorKind::BodyVelocity, vec({vx, vy}), isotropic(2, sigma));
  }
  static Measurement yaw_rate(double t, double r, double sigma) {
    return make(t, SensorKind::YawRate, vec({r}), isotropic(1, sigma));
  }
  static Measurement virtual_pose(double t, const Pose2& pose, const Cov3& cov) {
    return make(t, SensorKind::VirtualPose, vec({pose.x(), pose.y(), pose.psi()}), MeasCov(cov));
  }

  static Measurement make(double t, SensorKind kind, MeasVec z, MeasCov R) {
    const int n = sensor_dof(kind);
    if (z.size() != n || R.rows() != n || R.cols() != n) {
      throw std::invalid_argument("Measurement: dimension does not match sensor kind");
    }
    if (!is_symmetric(R) || min_eigenvalue(R) <= 0.0) {
      throw std::invalid_argument("Measurement: noise covariance must be positive definite");
    }
    return Measurement{t, kind, std::move(z), std::move(R)};
  }

 private:
  static MeasVec vec(std::initializer_list<double> values) {
    MeasVec v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double value : values) v[i++] = value;
    return v;
  }
  static MeasCov isotropic(int n, double sigma) {
    MeasCov R = MeasCov::Identity(n, n);
    return R * (sigma * sigma);
  }
};

struct UpdateOutcome {
  bool accepted = false;  // innovation passed the gate
  bool fused = false;     // accepted and the sensor was healthy
  double d2 = 0.0;
  MeasVec innovation;
  int dof = 0;
};

}  // namespace fsd::ekf
