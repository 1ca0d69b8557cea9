#pragma once

#include <cmath>
#include <stdexcept>

#include "fsd/core/angle.hpp"
#include "fsd/ekf/types.hpp"

namespace fsd::ekf {

inline constexpr double kMaxPredictStep = 0.1;

// Continuous-time process noise spectral density, diag(Q) per second.
struct ProcessNoise {
  StateVec q_diag = (StateVec() << 0.0, 0.0, 0.0, 0.5 * 0.5, 0.5 * 0.5, 0.3 * 0.3).finished();

  Cov6 matrix() const { return q_diag.asDiagonal(); }
};

// Planar kinematics driven by body accelerations; yaw rate is a random walk.
inline StateVec process_derivative(const StateVec& x, const ImuInput& u) {
  const double c = std::cos(x[kPsi]);
  const double s = std::sin(x[kPsi]);
  const double vx = x[kVx];
  const double vy = x[kVy];
  const double r = x[kYawRate];
  StateVec dx;
  dx << vx * c - vy * s, vx * s + vy * c, r, u.ax + r * vy, u.ay - r * vx, 0.0;
  return dx;
}

// Explicit Euler step of the process model. Heading is not wrapped here.
inline StateVec process_step(const StateVec& x, const ImuInput& u, double dt) {
  return x + dt * process_derivative(x, u);
}

// d(process_step)/dx.
inline Cov6 process_jacobian(const StateVec& x, double dt) {
  const double c = std::cos(x[kPsi]);
  const double s = std::sin(x[kPsi]);
  const double vx = x[kVx];
  const double vy = x[kVy];
  const double r = x[kYawRate];

  Cov6 F = Cov6::Identity();
  F(kPx, kPsi) = dt * (-vx * s - vy * c);
  F(kPx, kVx) = dt * c;
  F(kPx, kVy) = -dt * s;
  F(kPy, kPsi) = dt * (vx * c - vy * s);
  F(kPy, kVx) = dt * s;
  F(kPy, kVy) = dt * c;
  F(kPsi, kYawRate) = dt;
  F(kVx, kVy) = dt * r;
  F(kVx, kYawRate) = dt * vy;
  F(kVy, kVx) = -dt * r;
  F(kVy, kYawRate) = -dt * vx;
  return F;
}

inline VehicleState predict(const VehicleState& s, const ImuInput& u, double dt,
                            const ProcessNoise& noise = {}) {
  if (!(dt > 0.0) || dt > kMaxPredictStep) {
    throw std::invalid_argument("predict: dt must lie in (0, 0.1] s; sub-step longer gaps");
  }
  if (!std::isfinite(u.ax) || !std::isfinite(u.ay)) {
    throw std::invalid_argument("predict: non-finite IMU input");
  }
  const Cov6 F = process_jacobian(s.x, dt);
  VehicleState out;
  out.t = s.t + dt;
  out.x = process_step(s.x, u, dt);
  out.x[kPsi] = wrap_angle(out.x[kPsi]);
  out.P = symmetrize(F * s.P * F.transpose() + noise.matrix() * dt);
  return out;
}

}  // namespace fsd::ekf
