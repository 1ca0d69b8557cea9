#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "fsd/core/angle.hpp"
#include "fsd/core/errors.hpp"
#include "fsd/ekf/chi2.hpp"
#include "fsd/ekf/health.hpp"
#include "fsd/ekf/types.hpp"

namespace fsd::ekf {

using fsd::SingularInnovationError;

inline MeasVec measurement_model(SensorKind kind, const StateVec& x) {
  MeasVec h(sensor_dof(kind));
  switch (kind) {
    case SensorKind::Gps: h << x[kPx], x[kPy]; break;
    case SensorKind::BodyVelocity: h << x[kVx], x[kVy]; break;
    case SensorKind::YawRate: h << x[kYawRate]; break;
    case SensorKind::VirtualPose: h << x[kPx], x[kPy], x[kPsi]; break;
  }
  return h;
}

inline MeasJacobian measurement_jacobian(SensorKind kind) {
  MeasJacobian H = MeasJacobian::Zero(sensor_dof(kind), 6);
  switch (kind) {
    case SensorKind::Gps: H(0, kPx) = 1.0; H(1, kPy) = 1.0; break;
    case SensorKind::BodyVelocity: H(0, kVx) = 1.0; H(1, kVy) = 1.0; break;
    case SensorKind::YawRate: H(0, kYawRate) = 1.0; break;
    case SensorKind::VirtualPose: H(0, kPx) = 1.0; H(1, kPy) = 1.0; H(2, kPsi) = 1.0; break;
  }
  return H;
}

inline MeasVec innovation(const Measurement& m, const StateVec& x) {
  MeasVec nu = m.z - measurement_model(m.kind, x);
  if (m.kind == SensorKind::VirtualPose) {
    nu[2] = wrap_angle(nu[2]);
  }
  return nu;
}

// EKF update with an explicit gate threshold. A threshold of +inf disables gating.
inline std::pair<VehicleState, UpdateOutcome> update_gated(const VehicleState& s, const Measurement& m,
                                                           bool sensor_healthy, double gate_threshold) {
  if (m.t < s.t) {
    throw std::invalid_argument("update: measurement older than state");
  }
  const MeasJacobian H = measurement_jacobian(m.kind);
  const MeasVec nu = innovation(m, s.x);
  const MeasCov S = symmetrize(H * s.P * H.transpose() + m.R);

  Eigen::LLT<MeasCov> llt(S);
  if (llt.info() != Eigen::Success || !S.allFinite()) {
    throw SingularInnovationError(condition_number(S));
  }
  const double cond = condition_number(S);
  if (cond > 1e12) {
    throw SingularInnovationError(cond);
  }

  UpdateOutcome outcome;
  outcome.dof = m.dof();
  outcome.innovation = nu;
  outcome.d2 = std::max(0.0, nu.dot(llt.solve(nu)));
  outcome.accepted = outcome.d2 <= gate_threshold;
  outcome.fused = outcome.accepted && sensor_healthy;
  if (!outcome.fused) {
    return {s, outcome};
  }

  // K = P H^T S^-1, Joseph-form covariance update.
  const GainMatrix PHt = s.P * H.transpose();
  const GainMatrix K = llt.solve(PHt.transpose()).transpose();
  const Cov6 IKH = Cov6::Identity() - K * H;

  VehicleState out = s;
  out.x += K * nu;
  out.x[kPsi] = wrap_angle(out.x[kPsi]);
  out.P = symmetrize(IKH * s.P * IKH.transpose() + K * m.R * K.transpose());
  return {out, outcome};
}

inline std::pair<VehicleState, UpdateOutcome> update(const VehicleState& s, const Measurement& m,
                                                     const SensorHealth& health, double gate_p) {
  return update_gated(s, m, health.healthy(), chi2_gate(m.dof(), gate_p));
}

}  // namespace fsd::ekf
