#pragma once

#include <cstdint>
#include <queue>
#include <variant>
#include <vector>

#include "fsd/ekf/types.hpp"

namespace fsd::harness {

// Tie-break order for events sharing a tick.
enum class Channel : int { Imu = 0, Gyro = 1, Velocity = 2, Gps = 3, Lidar = 4 };

inline Channel channel_of(ekf::SensorKind kind) {
  switch (kind) {
    case ekf::SensorKind::YawRate: return Channel::Gyro;
    case ekf::SensorKind::BodyVelocity: return Channel::Velocity;
    case ekf::SensorKind::Gps: return Channel::Gps;
    case ekf::SensorKind::VirtualPose: return Channel::Lidar;
  }
  return Channel::Lidar;
}

struct LidarFrame {};

using EventPayload = std::variant<ekf::ImuInput, ekf::Measurement, LidarFrame>;

struct ScheduledEvent {
  std::int64_t tick = 0;
  Channel channel = Channel::Imu;
  std::uint64_t seq = 0;  // insertion order, for full determinism within a channel
  EventPayload payload;
};

// Global event queue ordered by (tick, channel priority, insertion order).
class EventQueue {
 public:
  void push(std::int64_t tick, Channel channel, EventPayload payload) {
    queue_.push(ScheduledEvent{tick, channel, next_seq_++, std::move(payload)});
  }

  bool empty() const { return queue_.empty(); }
  std::size_t size() const { return queue_.size(); }
  const ScheduledEvent& top() const { return queue_.top(); }

  ScheduledEvent pop() {
    ScheduledEvent e = queue_.top();
    queue_.pop();
    return e;
  }

 private:
  struct Later {
    bool operator()(const ScheduledEvent& a, const ScheduledEvent& b) const {
      if (a.tick != b.tick) return a.tick > b.tick;
      if (a.channel != b.channel) return a.channel > b.channel;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<ScheduledEvent, std::vector<ScheduledEvent>, Later> queue_;
  std::uint64_t next_seq_ = 0;
};

}  // namespace fsd::harness
