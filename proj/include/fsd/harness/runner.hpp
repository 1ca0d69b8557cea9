#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fsd/core/rng.hpp"
#include "fsd/ekf/estimator.hpp"
#include "fsd/harness/run_log.hpp"
#include "fsd/harness/scenario.hpp"
#include "fsd/harness/scheduler.hpp"
#include "fsd/lidar/detector.hpp"
#include "fsd/localize/mcl.hpp"
#include "fsd/sim/lidar_model.hpp"
#include "fsd/sim/nav_sensors.hpp"
#include "fsd/sim/pure_pursuit.hpp"
#include "fsd/sim/track.hpp"
#include "fsd/sim/vehicle.hpp"
#include "fsd/slam/cone_map.hpp"
#include "fsd/slam/fastslam.hpp"
#include "fsd/slam/loop_closure.hpp"

namespace fsd::harness {

inline constexpr std::int64_t kFrameTicks = 20;  // LiDAR and logging rate: 10 Hz

enum class Phase { Slam, Localization };

inline std::string_view phase_name(Phase p) { return p == Phase::Slam ? "slam" : "localization"; }

struct RunResult {
  RunLog log;
  sim::Track track;
  std::optional<slam::ConeMap> map;  // extracted (slam, full) or prior (localization) map
  std::optional<std::string> failure;

  bool ok() const { return !failure.has_value(); }
};

// Simulated time limit: 1.5x the nominal mission time plus 30 s.
inline double time_limit(const Scenario& sc, double lap_length) {
  if (sc.run.max_time > 0.0) return sc.run.max_time;
  const double laps = static_cast<double>(sc.run.laps);
  double nominal = 0.0;
  switch (sc.run.mode) {
    case RunMode::Slam: nominal = laps * lap_length / sc.vehicle.slam_speed; break;
    case RunMode::Localization: nominal = laps * lap_length / sc.vehicle.race_speed; break;
    case RunMode::Full:
      nominal = lap_length / sc.vehicle.slam_speed + (laps - 1.0) * lap_length / sc.vehicle.race_speed;
      break;
  }
  return 1.5 * nominal + 30.0;
}

inline Json cones_json(std::span<const Vec2> cones) {
  Json out = Json::array();
  for (const Vec2& c : cones) out.push_back(Json::array({c.x(), c.y()}));
  return out;
}

inline Json map_json(const slam::ConeMap& map, std::string_view source) {
  return Json{{"source", source}, {"cones", cones_json(map.cones)}, {"hits", map.hits}};
}

inline slam::ConeMap map_from_json(const Json& j) {
  slam::ConeMap map;
  for (const auto& c : j.at("cones")) map.cones.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
  map.hits = j.value("hits", std::vector<int>(map.cones.size(), 0));
  return map;
}

namespace detail {

struct SensorCounters {
  std::int64_t evaluated = 0;
  std::int64_t rejected = 0;
};

// One closed-loop mission. Owns every component; run() drives it to completion.
class Mission {
 public:
  explicit Mission(const Scenario& sc)
      : sc_(sc),
        track_(sim::generate_track(sc.track.seed, sc.track.length, sc.track.width, sc.track.cone_spacing)),
        cones_(track_.all_cones()),
        nav_(sc.run.seed, sc.sensors.nav, sc.weather, sc.sensors.enable),
        lidar_rng_(sc.run.seed, 20),
        pursuit_{sc.vehicle.min_lookahead, sc.vehicle.params},
        limit_(time_limit(sc, track_.length())) {}

  RunResult run() {
    start();
    for (std::int64_t tick = 0; !stopped_; ++tick) {
      if (tick > 0) integrate_odometry();
      schedule_sensors(tick);
      while (!stopped_ && !queue_.empty() && queue_.top().tick <= tick) dispatch(queue_.pop());
      if (stopped_) break;
      const sim::DriveCommand cmd =
          sim::pure_pursuit(truth_, track_, sc_.vehicle.lookahead_time, target_speed_, pursuit_);
      truth_ = sim::step_vehicle(truth_, cmd, sim::kTickDt, sc_.vehicle.params);
      truth_.t = sim::tick_time(tick + 1);
      estimator_->predict_to(sim::tick_time(tick));
      body_rates_ = estimator_->state().x.tail<3>();
    }
    RunResult out;
    out.log = std::move(log_);
    out.track = std::move(track_);
    out.map = std::move(map_);
    out.failure = std::move(failure_);
    return out;
  }

 private:
  void start() {
    phase_ = sc_.run.mode == RunMode::Localization ? Phase::Localization : Phase::Slam;
    target_speed_ = phase_ == Phase::Slam ? sc_.vehicle.slam_speed : sc_.vehicle.race_speed;

    truth_.pose = track_.start_pose();
    truth_.vx = target_speed_;
    // Start on the arc the controller is about to steer, so yaw rate is continuous at t=0.
    const sim::DriveCommand cmd0 =
        sim::pure_pursuit(truth_, track_, sc_.vehicle.lookahead_time, target_speed_, pursuit_);
    truth_.r = truth_.vx * std::tan(cmd0.steering) / sc_.vehicle.params.wheelbase;

    ekf::VehicleState init;
    init.x << truth_.pose.x(), truth_.pose.y(), truth_.pose.psi(), truth_.vx, truth_.vy, truth_.r;
    const auto sq = [](double v) { return v * v; };
    init.P = ekf::StateVec(sq(sc_.ekf.init_sigma_xy), sq(sc_.ekf.init_sigma_xy), sq(sc_.ekf.init_sigma_psi),
                           sq(sc_.ekf.init_sigma_v), sq(sc_.ekf.init_sigma_v), sq(sc_.ekf.init_sigma_r))
                 .asDiagonal();
    estimator_.emplace(sc_.ekf.filter, init);
    body_rates_ = init.x.tail<3>();
    start_pose_ = init.pose();

    log_.append(0.0, "track",
                Json{{"length", track_.length()}, {"width", track_.width}, {"cones", cones_json(cones_)}});
    log_.append(0.0, "start",
                Json{{"mode", mode_name(sc_.run.mode)},
                     {"phase", phase_name(phase_)},
                     {"laps", sc_.run.laps},
                     {"seed", sc_.run.seed},
                     {"time_limit", limit_}});

    if (phase_ == Phase::Slam) {
      slam_.emplace(sc_.slam.params, start_pose_, mix_stream(sc_.run.seed, 0x736c616dULL));
      trajectory_.push_back(start_pose_);
    } else {
      slam::ConeMap prior;
      if (sc_.run.map_file.empty()) {
        prior.cones = cones_;
        prior.hits.assign(cones_.size(), 0);
      } else {
        prior = slam::load_map_csv(sc_.run.map_file);
      }
      log_.append(0.0, "map", map_json(prior, "prior"));
      start_localizer(std::move(prior), start_pose_);
    }
  }

  void start_localizer(slam::ConeMap map, const Pose2& at) {
    auto index = std::make_shared<const localize::MapIndex>(map);
    map_ = std::move(map);
    localizer_ = localize::make_localizer(std::move(index), at, sc_.localizer,
                                          mix_stream(sc_.run.seed, 0x6c6f63ULL + relocalizations_));
  }

  // Dead-reckons the EKF body velocity and yaw rate over one tick (Euler).
  void integrate_odometry() {
    const double dt = sim::kTickDt;
    odom_ = pose_compose(odom_, Pose2(body_rates_[0] * dt, body_rates_[1] * dt, body_rates_[2] * dt));
  }

  void schedule_sensors(std::int64_t tick) {
    sim::NavSample sample = nav_.sample(tick, truth_);
    if (sample.imu) queue_.push(tick, Channel::Imu, *sample.imu);
    for (ekf::Measurement& m : sample.measurements) queue_.push(tick, channel_of(m.kind), std::move(m));
    if (tick > 0 && tick % kFrameTicks == 0) queue_.push(tick, Channel::Lidar, LidarFrame{});
  }

  void dispatch(ScheduledEvent e) {
    if (auto* imu = std::get_if<ekf::ImuInput>(&e.payload)) {
      estimator_->on_imu(*imu);
      if (sc_.run.log_high_rate) log_.append(imu->t, "imu", Json{{"ax", imu->ax}, {"ay", imu->ay}});
    } else if (auto* m = std::get_if<ekf::Measurement>(&e.payload)) {
      apply_measurement(*m);
    } else {
      frame(sim::tick_time(e.tick));
    }
  }

  void apply_measurement(const ekf::Measurement& m) {
    const auto report = estimator_->on_measurement(m);
    if (!report) return;
    auto& c = counters_[static_cast<std::size_t>(m.kind)];
    ++c.evaluated;
    c.rejected += report->outcome.accepted ? 0 : 1;
    if (m.kind != ekf::SensorKind::YawRate || sc_.run.log_high_rate) {
      log_.append(m.t, "meas",
                  Json{{"sensor", ekf::sensor_name(m.kind)},
                       {"z", vector_json(m.z)},
                       {"d2", report->outcome.d2},
                       {"accepted", report->outcome.accepted},
                       {"fused", report->outcome.fused}});
    }
    if (report->status_changed()) {
      const auto& h = estimator_->health(m.kind);
      log_.append(m.t, "health",
                  Json{{"sensor", ekf::sensor_name(m.kind)},
                       {"status", h.healthy() ? "healthy" : "unhealthy"},
                       {"rejection_fraction", h.rejection_fraction()}});
    }
  }

  void frame(double t) {
    estimator_->predict_to(t);
    const Pose2 pose = estimator_->state().pose();
    const Pose2 odom = std::exchange(odom_, Pose2::identity());
    const double dt = t - last_frame_t_;
    last_frame_t_ = t;

    if (sc_.sensors.lidar) perceive(t, odom, dt);

    log_.append(t, "truth",
                Json{{"x", Json::array({truth_.pose.x(), truth_.pose.y(), truth_.pose.psi(), truth_.vx, truth_.vy,
                                        truth_.r})}});
    const auto& s = estimator_->state();
    log_.append(t, "estimate",
                Json{{"x", vector_json(s.x)}, {"P", matrix_json(s.P)}, {"phase", phase_name(phase_)}});

    if (phase_ == Phase::Slam) check_loop_closure(t, pose);
    count_laps(t);
    if (stopped_) return;

    const auto diag = estimator_->diagnose();
    if (diag.divergence) {
      fail(t, "divergence", Json{{"position_trace", diag.position_trace}});
      return;
    }
    if (t >= limit_) fail(t, "timeout", Json{{"time_limit", limit_}});
  }

  void perceive(double t, const Pose2& odom, double dt) {
    const lidar::PointCloud cloud =
        sim::sense_lidar(truth_, std::span<const Vec2>(cones_), sc_.weather, sc_.sensors.lidar_model, lidar_rng_);
    const auto obs = lidar::detect_cones(cloud, sc_.sensors.detector);
    Json det = Json::array();
    for (const auto& o : obs) det.push_back(Json::array({o.range, o.bearing}));
    log_.append(t, "detections", Json{{"points", cloud.size()}, {"obs", std::move(det)}});

    if (phase_ == Phase::Slam) {
      if (!slam_) return;
      std::optional<slam::PositionPrior> prior;
      if (sc_.slam.position_prior) {
        const auto& s = estimator_->state();
        prior = slam::PositionPrior{s.x.head<2>(), s.P.topLeftCorner<2, 2>()};
      }
      const auto summary = slam_->step(odom, dt, obs, prior);
      log_.append(t, "slam",
                  Json{{"n_eff", summary.n_eff},
                       {"resampled", summary.resampled},
                       {"best", summary.best},
                       {"landmarks", summary.best_landmarks},
                       {"pose", pose_json(summary.best_pose)}});
      return;
    }

    localize::MclReport report;
    try {
      auto [next, vp] = localize::mcl_step(std::move(*localizer_), t, odom, dt, obs, sc_.localizer, &report);
      localizer_ = std::move(next);
      log_.append(t, "localizer",
                  Json{{"n_eff", report.n_eff}, {"resampled", report.resampled}, {"matched", report.matched}});
      apply_measurement(vp);
    } catch (const localize::LocalizationLostError& e) {
      ++relocalizations_;
      const Pose2 at = estimator_->state().pose();
      log_.append(t, "localization_lost", Json{{"reason", e.what()}, {"reinit", pose_json(at)}});
      start_localizer(*map_, at);
    }
  }

  void check_loop_closure(double t, const Pose2& pose) {
    trajectory_.push_back(pose);
    if (loop_closed_ || !slam::detect_loop_closure(trajectory_, start_pose_, sc_.slam.closure)) return;
    loop_closed_ = true;
    loop_closure_time_ = t;
    log_.append(t, "loop_closure", Json{{"pose", pose_json(pose)}, {"path_length", slam::path_length(trajectory_)}});
    if (sc_.run.mode != RunMode::Full) return;

    slam::ConeMap map = slam_->extract();
    log_.append(t, "map", map_json(map, "slam"));
    const Pose2 at = slam_->best().pose;
    slam_.reset();
    if (map.empty()) {
      fail(t, "empty_map", Json::object());
      return;
    }
    start_localizer(std::move(map), at);
    phase_ = Phase::Localization;
    target_speed_ = sc_.vehicle.race_speed;
    log_.append(t, "mode", Json{{"from", "slam"}, {"to", "localization"}, {"target_speed", target_speed_}});
  }

  void count_laps(double t) {
    const double L = track_.length();
    const double s = track_.project(truth_.pose.position()).s;
    if (!last_s_) {
      last_s_ = s;
      return;
    }
    double ds = s - *last_s_;
    if (ds > 0.5 * L) ds -= L;
    if (ds < -0.5 * L) ds += L;
    progress_ += ds;
    last_s_ = s;
    while (laps_ < sc_.run.laps && progress_ >= static_cast<double>(laps_ + 1) * L) {
      ++laps_;
      log_.append(t, "lap", Json{{"lap", laps_}, {"phase", phase_name(phase_)}});
    }
    if (laps_ >= sc_.run.laps) finish(t);
  }

  Json end_summary(std::string_view status) const {
    Json sensors = Json::object();
    for (ekf::SensorKind kind : ekf::kAllSensorKinds) {
      const auto& c = counters_[static_cast<std::size_t>(kind)];
      sensors[std::string(ekf::sensor_name(kind))] = Json{{"evaluated", c.evaluated}, {"rejected", c.rejected}};
    }
    Json out{{"status", status},
             {"laps", laps_},
             {"sensors", std::move(sensors)},
             {"dropped_out_of_order", estimator_->dropped_out_of_order()},
             {"relocalizations", relocalizations_}};
    out["loop_closure_time"] = loop_closure_time_ ? Json(*loop_closure_time_) : Json(nullptr);
    return out;
  }

  void finish(double t) {
    if (sc_.run.mode == RunMode::Slam && slam_) {
      map_ = slam_->extract();
      log_.append(t, "map", map_json(*map_, "slam"));
    }
    log_.append(t, "end", end_summary("complete"));
    stopped_ = true;
  }

  void fail(double t, std::string reason, Json detail) {
    detail["reason"] = reason;
    log_.append(t, "failure", std::move(detail));
    log_.append(t, "end", end_summary("failure"));
    failure_ = std::move(reason);
    stopped_ = true;
  }

  const Scenario& sc_;
  sim::Track track_;
  std::vector<Vec2> cones_;
  sim::NavSensorSuite nav_;
  SeededRng lidar_rng_;
  sim::PursuitParams pursuit_;
  double limit_;

  RunLog log_;
  EventQueue queue_;
  sim::TruthState truth_;
  std::optional<ekf::Estimator> estimator_;
  std::optional<slam::FastSlam> slam_;
  std::optional<localize::LocalizerState> localizer_;
  std::optional<slam::ConeMap> map_;
  std::array<SensorCounters, ekf::kSensorKindCount> counters_{};

  Phase phase_ = Phase::Slam;
  double target_speed_ = 0.0;
  Pose2 start_pose_;
  Pose2 odom_;               // body-frame motion since the last frame
  Vec3 body_rates_ = Vec3::Zero();  // EKF (vx, vy, r) after the previous tick
  double last_frame_t_ = 0.0;
  std::vector<Pose2> trajectory_;
  bool loop_closed_ = false;
  std::optional<double> loop_closure_time_;
  std::optional<double> last_s_;
  double progress_ = 0.0;
  std::int64_t laps_ = 0;
  std::uint64_t relocalizations_ = 0;
  bool stopped_ = false;
  std::optional<std::string> failure_;
};

}  // namespace detail

// Runs one closed-loop mission. Throws ValidationError on an invalid scenario;
// runtime failures (divergence, timeout) end the log with a failure record.
inline RunResult run_scenario(const Scenario& sc) {
  validate(sc);
  return detail::Mission(sc).run();
}

}  // namespace fsd::harness
