#pragma once

#include <array>
#include <cstddef>
#include <deque>

#include "fsd/ekf/types.hpp"

namespace fsd::ekf {

enum class HealthStatus { Healthy, Unhealthy };

struct HealthPolicy {
  std::size_t window = 50;
  double reject_threshold = 0.5;   // rejection fraction that trips the sensor
  std::size_t recovery_count = 20;  // consecutive gate passes to recover
};

// Sliding-window self-diagnosis of one sensor channel.
class SensorHealth {
 public:
  SensorHealth() = default;
  explicit SensorHealth(HealthPolicy policy) : policy_(policy) {}

  HealthStatus status() const { return status_; }
  bool healthy() const { return status_ == HealthStatus::Healthy; }
  const HealthPolicy& policy() const { return policy_; }
  const std::deque<bool>& rejections() const { return rejected_; }
  std::size_t consecutive_accepts() const { return consecutive_accepts_; }

  std::size_t rejection_count() const {
    std::size_t n = 0;
    for (bool r : rejected_) n += r ? 1 : 0;
    return n;
  }

  // Rejections in the window divided by the full window length.
  double rejection_fraction() const {
    return policy_.window == 0 ? 0.0
                               : static_cast<double>(rejection_count()) / static_cast<double>(policy_.window);
  }

  friend SensorHealth health_step(SensorHealth h, const UpdateOutcome& o);

 private:
  HealthPolicy policy_;
  HealthStatus status_ = HealthStatus::Healthy;
  std::deque<bool> rejected_;
  std::size_t consecutive_accepts_ = 0;
};

inline SensorHealth health_step(SensorHealth h, const UpdateOutcome& o) {
  h.rejected_.push_back(!o.accepted);
  while (h.rejected_.size() > h.policy_.window) {
    h.rejected_.pop_front();
  }
  h.consecutive_accepts_ = o.accepted ? h.consecutive_accepts_ + 1 : 0;

  if (h.status_ == HealthStatus::Healthy) {
    if (h.rejection_fraction() > h.policy_.reject_threshold) {
      h.status_ = HealthStatus::Unhealthy;
      h.consecutive_accepts_ = 0;
    }
  } else if (h.consecutive_accepts_ >= h.policy_.recovery_count) {
    // Recovered sensors start over with a clean window.
    h.status_ = HealthStatus::Healthy;
    h.rejected_.clear();
  }
  return h;
}

using HealthBank = std::array<SensorHealth, kSensorKindCount>;

inline HealthBank make_health_bank(const HealthPolicy& policy) {
  HealthBank bank;
  bank.fill(SensorHealth(policy));
  return bank;
}

struct EstimatorDiagnostics {
  std::array<HealthStatus, kSensorKindCount> status{};
  bool divergence = false;
  double position_trace = 0.0;  // m^2
};

inline EstimatorDiagnostics diagnostics(const VehicleState& s, const HealthBank& healths,
                                        double divergence_trace = 25.0) {
  EstimatorDiagnostics d;
  bool any_position_healthy = false;
  for (SensorKind kind : kAllSensorKinds) {
    const auto i = static_cast<std::size_t>(kind);
    d.status[i] = healths[i].status();
    if (is_position_sensor(kind) && healths[i].healthy()) {
      any_position_healthy = true;
    }
  }
  d.position_trace = s.P(kPx, kPx) + s.P(kPy, kPy);
  d.divergence = !(d.position_trace <= divergence_trace) || !any_position_healthy;
  return d;
}

}  // namespace fsd::ekf
