#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>

#include "fsd/ekf/chi2.hpp"
#include "fsd/ekf/health.hpp"
#include "fsd/ekf/process_model.hpp"
#include "fsd/ekf/types.hpp"
#include "fsd/ekf/update.hpp"

namespace fsd::ekf {

struct EkfConfig {
  ProcessNoise noise;
  double gate_p = 0.99;
  HealthPolicy health;
  double divergence_trace = 25.0;  // m^2
  // When false, every measurement is fused: no gating and no health tracking.
  bool diagnosis = true;
};

struct MeasurementReport {
  UpdateOutcome outcome;
  HealthStatus before = HealthStatus::Healthy;
  HealthStatus after = HealthStatus::Healthy;

  bool status_changed() const { return before != after; }
};

// Single-owner estimator: IMU-driven prediction plus gated, health-aware updates.
class Estimator {
 public:
  Estimator(const EkfConfig& config, VehicleState initial)
      : config_(config), state_(std::move(initial)), healths_(make_health_bank(config.health)) {
    for (SensorKind kind : kAllSensorKinds) {
      gates_[index(kind)] = config_.diagnosis ? chi2_gate(sensor_dof(kind), config_.gate_p)
                                              : std::numeric_limits<double>::infinity();
    }
  }

  const VehicleState& state() const { return state_; }
  const EkfConfig& config() const { return config_; }
  const HealthBank& healths() const { return healths_; }
  const SensorHealth& health(SensorKind kind) const { return healths_[index(kind)]; }
  std::size_t dropped_out_of_order() const { return dropped_; }

  // Propagates to u.t, holding the previous IMU sample over the interval.
  void on_imu(const ImuInput& u) {
    advance_to(u.t);
    last_imu_ = u;
  }

  // Out-of-order measurements are dropped and counted.
  std::optional<MeasurementReport> on_measurement(const Measurement& m) {
    if (m.t < state_.t) {
      ++dropped_;
      return std::nullopt;
    }
    advance_to(m.t);
    SensorHealth& h = healths_[index(m.kind)];
    const bool healthy = !config_.diagnosis || h.healthy();
    auto [next, outcome] = update_gated(state_, m, healthy, gates_[index(m.kind)]);
    state_ = std::move(next);

    MeasurementReport report;
    report.outcome = outcome;
    report.before = h.status();
    if (config_.diagnosis) {
      h = health_step(h, outcome);
    }
    report.after = h.status();
    return report;
  }

  // Time update only; no-op when t is not ahead of the state.
  void predict_to(double t) { advance_to(t); }

  EstimatorDiagnostics diagnose() const { return diagnostics(state_, healths_, config_.divergence_trace); }

 private:
  static std::size_t index(SensorKind kind) { return static_cast<std::size_t>(kind); }

  void advance_to(double t) {
    double remaining = t - state_.t;
    while (remaining > 1e-12) {
      const double dt = std::min(remaining, kMaxPredictStep);
      const double target = state_.t + dt;
      state_ = predict(state_, last_imu_, dt, config_.noise);
      state_.t = (dt == remaining) ? t : target;
      remaining = t - state_.t;
    }
  }

  EkfConfig config_;
  VehicleState state_;
  HealthBank healths_;
  std::array<double, kSensorKindCount> gates_{};
  ImuInput last_imu_{};
  std::size_t dropped_ = 0;
};

}  // namespace fsd::ekf
