#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fsd/ekf/estimator.hpp"
#include "fsd/lidar/detector.hpp"
#include "fsd/localize/mcl.hpp"
#include "fsd/sim/lidar_model.hpp"
#include "fsd/sim/nav_sensors.hpp"
#include "fsd/sim/pure_pursuit.hpp"
#include "fsd/sim/vehicle.hpp"
#include "fsd/sim/weather.hpp"
#include "fsd/slam/fastslam.hpp"
#include "fsd/slam/loop_closure.hpp"

namespace fsd::harness {

enum class RunMode { Slam, Localization, Full };

inline std::string_view mode_name(RunMode m) {
  switch (m) {
    case RunMode::Slam: return "slam";
    case RunMode::Localization: return "localization";
    case RunMode::Full: return "full";
  }
  return "unknown";
}

inline bool parse_mode(std::string_view s, RunMode& out) {
  if (s == "slam") out = RunMode::Slam;
  else if (s == "localization") out = RunMode::Localization;
  else if (s == "full") out = RunMode::Full;
  else return false;
  return true;
}

struct TrackConfig {
  std::uint64_t seed = 7;
  double length = 300.0;
  double width = 3.5;
  double cone_spacing = 5.0;
};

struct VehicleConfig {
  sim::VehicleParams params;
  double slam_speed = 5.0;
  double race_speed = 15.0;
  double lookahead_time = 0.3;
  double min_lookahead = 4.0;
};

struct SensorConfig {
  sim::NavNoise nav;
  sim::NavEnable enable;
  bool lidar = true;
  sim::LidarModel lidar_model;
  lidar::DetectorParams detector;
};

struct EstimatorConfig {
  ekf::EkfConfig filter;
  double init_sigma_xy = 0.1;
  double init_sigma_psi = 0.02;
  double init_sigma_v = 0.1;
  double init_sigma_r = 0.05;
};

struct SlamConfig {
  slam::SlamParams params;
  slam::LoopClosureParams closure;
  bool position_prior = true;  // weigh particles by the EKF position as well
};

struct RunConfig {
  RunMode mode = RunMode::Full;
  std::int64_t laps = 10;
  std::uint64_t seed = 1;
  double max_time = 0.0;  // s; 0 picks a limit from the lap count and speeds
  bool log_high_rate = false;
  std::string map_file;   // prior map for localization mode; empty uses the true cones
};

struct Scenario {
  TrackConfig track;
  VehicleConfig vehicle;
  SensorConfig sensors;
  sim::WeatherProfile weather;
  EstimatorConfig ekf;
  SlamConfig slam;
  localize::LocalizerParams localizer;
  RunConfig run;
};

// Raised for invalid scenarios; lists every offending "section.key".
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> keys, const std::string& detail = {})
      : std::runtime_error(describe(keys, detail)), keys_(std::move(keys)) {}
  const std::vector<std::string>& keys() const { return keys_; }

 private:
  static std::string describe(const std::vector<std::string>& keys, const std::string& detail) {
    std::ostringstream os;
    os << "invalid scenario:";
    for (const auto& k : keys) os << ' ' << k;
    if (!detail.empty()) os << " (" << detail << ')';
    return os.str();
  }
  std::vector<std::string> keys_;
};

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "size_t keys bind as uint64_t");
using ParamRef = std::variant<double*, std::int64_t*, std::uint64_t*, int*, bool*, std::string*,
                              RunMode*>;

struct ParamDef {
  std::string_view section;
  std::string_view key;
  double lo;
  double hi;
  std::string_view doc;
  ParamRef (*bind)(Scenario&);

  std::string name() const { return std::string(section) + "." + std::string(key); }
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Every configurable key with its documented range. Bounds are inclusive.
inline const std::vector<ParamDef>& parameter_table() {
  static const std::vector<ParamDef> table = {
      {"track", "seed", 0, 1e18, "track generator seed", [](Scenario& s) -> ParamRef { return &s.track.seed; }},
      {"track", "length", 100, 1000, "target lap length (m)", [](Scenario& s) -> ParamRef { return &s.track.length; }},
      {"track", "width", 2, 8, "track width, cone to cone (m)", [](Scenario& s) -> ParamRef { return &s.track.width; }},
      {"track", "cone_spacing", 1, 10, "maximum cone spacing along each side (m)",
       [](Scenario& s) -> ParamRef { return &s.track.cone_spacing; }},

      {"vehicle", "wheelbase", 0.5, 5, "wheelbase (m)", [](Scenario& s) -> ParamRef { return &s.vehicle.params.wheelbase; }},
      {"vehicle", "max_steer", 0.05, 1.0, "steering limit (rad)",
       [](Scenario& s) -> ParamRef { return &s.vehicle.params.max_steer; }},
      {"vehicle", "speed_tau", 0.05, 5, "speed response time constant (s)",
       [](Scenario& s) -> ParamRef { return &s.vehicle.params.speed_tau; }},
      {"vehicle", "slam_speed", 0.5, 30, "target speed while mapping (m/s)",
       [](Scenario& s) -> ParamRef { return &s.vehicle.slam_speed; }},
      {"vehicle", "race_speed", 0.5, 40, "target speed in localization mode (m/s)",
       [](Scenario& s) -> ParamRef { return &s.vehicle.race_speed; }},
      {"vehicle", "lookahead_time", 0.1, 5, "pure-pursuit lookahead time (s)",
       [](Scenario& s) -> ParamRef { return &s.vehicle.lookahead_time; }},
      {"vehicle", "min_lookahead", 0.5, 30, "minimum pure-pursuit lookahead (m)",
       [](Scenario& s) -> ParamRef { return &s.vehicle.min_lookahead; }},

      {"sensors", "gps_sigma", 0, 10, "GPS position noise (m)", [](Scenario& s) -> ParamRef { return &s.sensors.nav.gps; }},
      {"sensors", "velocity_sigma", 0, 5, "velocity sensor noise (m/s)",
       [](Scenario& s) -> ParamRef { return &s.sensors.nav.velocity; }},
      {"sensors", "gyro_sigma", 0, 1, "yaw-rate noise (rad/s)", [](Scenario& s) -> ParamRef { return &s.sensors.nav.gyro; }},
      {"sensors", "accel_sigma", 0, 5, "accelerometer noise (m/s^2)",
       [](Scenario& s) -> ParamRef { return &s.sensors.nav.accel; }},
      {"sensors", "gps_enabled", 0, 1, "GPS present", [](Scenario& s) -> ParamRef { return &s.sensors.enable.gps; }},
      {"sensors", "velocity_enabled", 0, 1, "velocity sensor present",
       [](Scenario& s) -> ParamRef { return &s.sensors.enable.velocity; }},
      {"sensors", "gyro_enabled", 0, 1, "gyro present", [](Scenario& s) -> ParamRef { return &s.sensors.enable.gyro; }},
      {"sensors", "imu_enabled", 0, 1, "accelerometer present", [](Scenario& s) -> ParamRef { return &s.sensors.enable.imu; }},
      {"sensors", "lidar_enabled", 0, 1, "LiDAR present", [](Scenario& s) -> ParamRef { return &s.sensors.lidar; }},
      {"sensors", "lidar_range", 1, 50, "LiDAR maximum range (m)",
       [](Scenario& s) -> ParamRef { return &s.sensors.lidar_model.max_range; }},
      {"sensors", "point_sigma", 0, 0.2, "LiDAR point noise (m)",
       [](Scenario& s) -> ParamRef { return &s.sensors.lidar_model.point_sigma; }},
      {"sensors", "cone_height", 0.1, 1, "cone height (m)",
       [](Scenario& s) -> ParamRef { return &s.sensors.lidar_model.cone_height; }},
      {"sensors", "cone_radius", 0.02, 0.5, "cone base radius (m)",
       [](Scenario& s) -> ParamRef { return &s.sensors.lidar_model.cone_radius; }},
      {"sensors", "ground_z_min", -1, 1, "lower edge of the kept height band (m)",
       [](Scenario& s) -> ParamRef { return &s.sensors.detector.ground_z_min; }},
      {"sensors", "ground_z_max", -1, 2, "upper edge of the kept height band (m)",
       [](Scenario& s) -> ParamRef { return &s.sensors.detector.ground_z_max; }},
      {"sensors", "grid_cell", 0.05, 2, "coarse clustering grid pitch (m)",
       [](Scenario& s) -> ParamRef { return &s.sensors.detector.grid_cell; }},
      {"sensors", "grid_min_points", 1, 100, "points for a grid cell to count as occupied",
       [](Scenario& s) -> ParamRef { return &s.sensors.detector.grid_min_points; }},
      {"sensors", "link_distance", 0.01, 2, "Euclidean refinement link distance (m)",
       [](Scenario& s) -> ParamRef { return &s.sensors.detector.link_distance; }},
      {"sensors", "cone_min_points", 1, 1000, "minimum cluster support",
       [](Scenario& s) -> ParamRef { return &s.sensors.detector.bounds.min_points; }},
      {"sensors", "cone_max_points", 1, 100000, "maximum cluster support",
       [](Scenario& s) -> ParamRef { return &s.sensors.detector.bounds.max_points; }},
      {"sensors", "cone_max_width", 0.05, 2, "maximum cluster horizontal extent (m)",
       [](Scenario& s) -> ParamRef { return &s.sensors.detector.bounds.max_width; }},
      {"sensors", "cone_max_height", 0.05, 2, "maximum cluster vertical extent (m)",
       [](Scenario& s) -> ParamRef { return &s.sensors.detector.bounds.max_height; }},
      {"sensors", "range_sigma_base", 1e-4, 1, "detection range noise at zero range (m)",
       [](Scenario& s) -> ParamRef { return &s.sensors.detector.noise.range_base; }},
      {"sensors", "range_sigma_slope", 0, 0.2, "detection range noise growth (m/m)",
       [](Scenario& s) -> ParamRef { return &s.sensors.detector.noise.range_slope; }},
      {"sensors", "bearing_sigma", 1e-4, 0.5, "detection bearing noise (rad)",
       [](Scenario& s) -> ParamRef { return &s.sensors.detector.noise.bearing; }},

      {"weather", "range_factor", 0.05, 1, "LiDAR range multiplier",
       [](Scenario& s) -> ParamRef { return &s.weather.range_factor; }},
      {"weather", "clutter_rate", 0, 1000, "clutter points per scan",
       [](Scenario& s) -> ParamRef { return &s.weather.clutter_rate; }},
      {"weather", "gps_dropout", 0, 1, "probability of losing a GPS fix",
       [](Scenario& s) -> ParamRef { return &s.weather.gps_dropout; }},
      {"weather", "gps_bias_rate", 0, 10, "GPS drift rate while the ramp is active (m/s)",
       [](Scenario& s) -> ParamRef { return &s.weather.gps_bias_rate; }},
      {"weather", "gps_bias_start", 0, 1e6, "ramp start time (s)",
       [](Scenario& s) -> ParamRef { return &s.weather.gps_bias_start; }},
      {"weather", "gps_bias_duration", 0, kInf, "ramp duration (s); the offset is held afterwards",
       [](Scenario& s) -> ParamRef { return &s.weather.gps_bias_duration; }},
      {"weather", "gps_bias_heading", -10, 10, "drift direction in the world frame (rad)",
       [](Scenario& s) -> ParamRef { return &s.weather.gps_bias_heading; }},

      {"ekf", "q_vx", 0, 100, "process noise density on vx (variance per second)",
       [](Scenario& s) -> ParamRef { return &s.ekf.filter.noise.q_diag[ekf::kVx]; }},
      {"ekf", "q_vy", 0, 100, "process noise density on vy (variance per second)",
       [](Scenario& s) -> ParamRef { return &s.ekf.filter.noise.q_diag[ekf::kVy]; }},
      {"ekf", "q_r", 0, 100, "process noise density on yaw rate (variance per second)",
       [](Scenario& s) -> ParamRef { return &s.ekf.filter.noise.q_diag[ekf::kYawRate]; }},
      {"ekf", "gate_p", 0.5000001, 0.9999999, "gate acceptance probability",
       [](Scenario& s) -> ParamRef { return &s.ekf.filter.gate_p; }},
      {"ekf", "window", 1, 10000, "health window length (evaluations)",
       [](Scenario& s) -> ParamRef { return &s.ekf.filter.health.window; }},
      {"ekf", "reject_threshold", 0, 1, "rejection fraction that marks a sensor unhealthy",
       [](Scenario& s) -> ParamRef { return &s.ekf.filter.health.reject_threshold; }},
      {"ekf", "recovery_count", 1, 10000, "consecutive gate passes to recover",
       [](Scenario& s) -> ParamRef { return &s.ekf.filter.health.recovery_count; }},
      {"ekf", "divergence_trace", 1e-3, 1e6, "position covariance trace that flags divergence (m^2)",
       [](Scenario& s) -> ParamRef { return &s.ekf.filter.divergence_trace; }},
      {"ekf", "diagnosis", 0, 1, "outlier rejection and self-diagnosis enabled",
       [](Scenario& s) -> ParamRef { return &s.ekf.filter.diagnosis; }},
      {"ekf", "init_sigma_xy", 1e-4, 100, "initial position std (m)",
       [](Scenario& s) -> ParamRef { return &s.ekf.init_sigma_xy; }},
      {"ekf", "init_sigma_psi", 1e-5, 3.2, "initial heading std (rad)",
       [](Scenario& s) -> ParamRef { return &s.ekf.init_sigma_psi; }},
      {"ekf", "init_sigma_v", 1e-4, 100, "initial velocity std (m/s)",
       [](Scenario& s) -> ParamRef { return &s.ekf.init_sigma_v; }},
      {"ekf", "init_sigma_r", 1e-5, 10, "initial yaw-rate std (rad/s)",
       [](Scenario& s) -> ParamRef { return &s.ekf.init_sigma_r; }},

      {"slam", "particles", 1, 100000, "particle count", [](Scenario& s) -> ParamRef { return &s.slam.params.particles; }},
      {"slam", "gate_p", 0.5000001, 0.9999999, "association gate probability",
       [](Scenario& s) -> ParamRef { return &s.slam.params.gate_p; }},
      {"slam", "new_landmark_prob", 1e-12, 1, "likelihood assigned to a new landmark",
       [](Scenario& s) -> ParamRef { return &s.slam.params.new_landmark_prob; }},
      {"slam", "min_hits", 1, 100000, "observations for a landmark to enter the map",
       [](Scenario& s) -> ParamRef { return &s.slam.params.min_hits; }},
      {"slam", "merge_distance", 0, 10, "map cones closer than this are merged (m)",
       [](Scenario& s) -> ParamRef { return &s.slam.params.merge_distance; }},
      {"slam", "noise_scale", 0, 100, "motion noise multiplier",
       [](Scenario& s) -> ParamRef { return &s.slam.params.noise_scale; }},
      {"slam", "position_prior", 0, 1, "weigh particles by the fused EKF position",
       [](Scenario& s) -> ParamRef { return &s.slam.position_prior; }},
      {"slam", "min_travel", 0, 1e6, "distance before loop closure is considered (m)",
       [](Scenario& s) -> ParamRef { return &s.slam.closure.min_travel; }},
      {"slam", "closure_radius", 0.1, 100, "loop-closure distance to the start (m)",
       [](Scenario& s) -> ParamRef { return &s.slam.closure.radius; }},
      {"slam", "closure_heading", 0.01, 3.15, "loop-closure heading tolerance (rad)",
       [](Scenario& s) -> ParamRef { return &s.slam.closure.max_heading_diff; }},

      {"localizer", "particles", 1, 100000, "particle count",
       [](Scenario& s) -> ParamRef { return &s.localizer.particles; }},
      {"localizer", "gate_p", 0.5000001, 0.9999999, "association gate probability",
       [](Scenario& s) -> ParamRef { return &s.localizer.gate_p; }},
      {"localizer", "outlier_prob", 1e-12, 1, "likelihood of an unmatched observation",
       [](Scenario& s) -> ParamRef { return &s.localizer.outlier_prob; }},
      {"localizer", "map_sigma", 0, 5, "assumed map cone error (m)",
       [](Scenario& s) -> ParamRef { return &s.localizer.map_sigma; }},
      {"localizer", "init_spread_xy", 0, 10, "initial particle spread (m)",
       [](Scenario& s) -> ParamRef { return &s.localizer.init_spread_xy; }},
      {"localizer", "init_spread_psi", 0, 3.2, "initial particle heading spread (rad)",
       [](Scenario& s) -> ParamRef { return &s.localizer.init_spread_psi; }},
      {"localizer", "min_sigma_xy", 1e-4, 10, "virtual pose position std floor (m)",
       [](Scenario& s) -> ParamRef { return &s.localizer.min_sigma_xy; }},
      {"localizer", "min_sigma_psi", 1e-5, 1, "virtual pose heading std floor (rad)",
       [](Scenario& s) -> ParamRef { return &s.localizer.min_sigma_psi; }},
      {"localizer", "noise_scale", 0, 100, "motion noise multiplier",
       [](Scenario& s) -> ParamRef { return &s.localizer.noise_scale; }},

      {"run", "mode", 0, 0, "slam | localization | full", [](Scenario& s) -> ParamRef { return &s.run.mode; }},
      {"run", "laps", 1, 1000, "laps to drive", [](Scenario& s) -> ParamRef { return &s.run.laps; }},
      {"run", "seed", 0, 1e18, "sensor and filter seed", [](Scenario& s) -> ParamRef { return &s.run.seed; }},
      {"run", "max_time", 0, 1e6, "simulated time limit (s); 0 derives one from laps",
       [](Scenario& s) -> ParamRef { return &s.run.max_time; }},
      {"run", "log_high_rate", 0, 1, "also log 200 Hz IMU and gyro records",
       [](Scenario& s) -> ParamRef { return &s.run.log_high_rate; }},
      {"run", "map_file", 0, 0, "prior cone map CSV for localization mode",
       [](Scenario& s) -> ParamRef { return &s.run.map_file; }},
  };
  return table;
}

inline const ParamDef* find_param(std::string_view section, std::string_view key) {
  for (const ParamDef& def : parameter_table()) {
    if (def.section == section && def.key == key) return &def;
  }
  return nullptr;
}

// Numeric view of a parameter for range checks; NaN for non-numeric kinds.
inline double numeric_value(const ParamRef& ref) {
  return std::visit(
      [](auto* p) -> double {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::string> || std::is_same_v<T, RunMode>) {
          return std::numeric_limits<double>::quiet_NaN();
        } else {
          return static_cast<double>(*p);
        }
      },
      ref);
}

inline std::string format_value(const ParamRef& ref) {
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::string>) return "\"" + *p + "\"";
        else if constexpr (std::is_same_v<T, RunMode>) return "\"" + std::string(mode_name(*p)) + "\"";
        else if constexpr (std::is_same_v<T, bool>) return *p ? "true" : "false";
        else if constexpr (std::is_same_v<T, double>) {
          if (std::isinf(*p)) return "inf";
          std::ostringstream os;
          os << *p;
          return os.str();
        } else return std::to_string(*p);
      },
      ref);
}

// Checks every parameter range plus cross-field constraints.
inline void validate(const Scenario& sc) {
  Scenario copy = sc;
  std::vector<std::string> bad;
  for (const ParamDef& def : parameter_table()) {
    const double v = numeric_value(def.bind(copy));
    if (std::isnan(v)) continue;
    if (!(v >= def.lo && v <= def.hi)) bad.push_back(def.name());
  }
  if (!(sc.sensors.detector.ground_z_min < sc.sensors.detector.ground_z_max)) {
    bad.push_back("sensors.ground_z_min");
    bad.push_back("sensors.ground_z_max");
  }
  if (sc.sensors.detector.bounds.min_points > sc.sensors.detector.bounds.max_points) {
    bad.push_back("sensors.cone_min_points");
    bad.push_back("sensors.cone_max_points");
  }
  if (!bad.empty()) {
    throw ValidationError(std::move(bad), "value out of documented range");
  }
}

}  // namespace fsd::harness
