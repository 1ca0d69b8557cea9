#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsd/core/angle.hpp"
#include "fsd/core/pose2.hpp"
#include "fsd/harness/run_log.hpp"
#include "fsd/sim/track.hpp"

namespace fsd::harness {

inline constexpr double kLandmarkMatchRadius = 1.0;   // m
inline constexpr double kDetectionMatchRadius = 0.3;  // m
inline constexpr double kDetectionRange = 10.0;       // m

// Undefined values (nothing to average over) stay empty and serialize as null.
struct Metrics {
  std::optional<double> ate_rmse;
  std::optional<double> heading_rmse;
  std::optional<double> ate_localization;
  std::optional<double> ate_final_lap;
  std::optional<double> landmark_rmse;
  std::optional<double> map_precision;
  std::optional<double> map_recall;
  std::optional<double> detection_precision;
  std::optional<double> detection_recall;
  std::optional<double> mean_nees;
  std::int64_t laps_completed = 0;
  std::optional<double> loop_closure_time;
  std::map<std::string, std::optional<double>> rejection_rate;  // per sensor name
  std::int64_t estimate_count = 0;
  bool diverged = false;
};

struct MapScore {
  std::optional<double> rmse;  // over matched pairs
  double precision = 0.0;
  double recall = 0.0;
  std::size_t matched = 0;
};

// Greedy one-to-one matching of map cones to true cones, closest pairs first,
// within `radius`. Unmatched map cones are false positives, unmatched true
// cones false negatives.
inline MapScore score_map(const std::vector<Vec2>& map, const std::vector<Vec2>& truth,
                          double radius = kLandmarkMatchRadius) {
  struct Pair {
    double d;
    std::size_t i;
    std::size_t j;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < map.size(); ++i) {
    for (std::size_t j = 0; j < truth.size(); ++j) {
      const double d = (map[i] - truth[j]).norm();
      if (d <= radius) pairs.push_back({d, i, j});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  std::vector<bool> used_map(map.size(), false), used_truth(truth.size(), false);
  MapScore score;
  double sum2 = 0.0;
  for (const Pair& p : pairs) {
    if (used_map[p.i] || used_truth[p.j]) continue;
    used_map[p.i] = used_truth[p.j] = true;
    sum2 += p.d * p.d;
    ++score.matched;
  }
  if (score.matched > 0) score.rmse = std::sqrt(sum2 / static_cast<double>(score.matched));
  const double m = static_cast<double>(score.matched);
  score.precision = map.empty() ? 0.0 : m / static_cast<double>(map.size());
  score.recall = truth.empty() ? 0.0 : m / static_cast<double>(truth.size());
  return score;
}

namespace detail {

struct Accumulator {
  double sum = 0.0;
  std::int64_t n = 0;

  void add(double v) {
    sum += v;
    ++n;
  }
  std::optional<double> mean() const { return n ? std::optional(sum / static_cast<double>(n)) : std::nullopt; }
  std::optional<double> rms() const {
    return n ? std::optional(std::sqrt(sum / static_cast<double>(n))) : std::nullopt;
  }
};

}  // namespace detail

// Metrics of one run log against the true track. Estimates are matched to
// truth records with the same timestamp. Throws if the log has no truth channel.
inline Metrics evaluate(const RunLog& log, const sim::Track& track) {
  std::map<double, Json> truth;
  for (const LogEvent& e : log.events()) {
    if (e.ch == "truth") truth[e.t] = e.data.at("x");
  }
  if (truth.empty()) throw std::runtime_error("evaluate: run log has no truth channel");

  Metrics m;
  const std::vector<Vec2> true_cones = track.all_cones();

  // Estimate events of the final completed lap lie in (previous lap event, last lap event].
  std::vector<double> lap_times;
  for (const LogEvent& e : log.events()) {
    if (e.ch == "lap") lap_times.push_back(e.t);
  }
  m.laps_completed = static_cast<std::int64_t>(lap_times.size());
  const double final_lo = lap_times.size() >= 2 ? lap_times[lap_times.size() - 2] : 0.0;
  const double final_hi = lap_times.empty() ? -1.0 : lap_times.back();

  detail::Accumulator ate, heading, ate_loc, ate_final, nees, det_tp, rec_tp;
  for (const LogEvent& e : log.events()) {
    if (e.ch == "estimate") {
      ++m.estimate_count;
      const auto it = truth.find(e.t);
      if (it == truth.end()) continue;
      const ekf::StateVec x = state_from_json(e.data.at("x"));
      const ekf::StateVec xt = state_from_json(it->second);
      ekf::StateVec err = x - xt;
      err[ekf::kPsi] = wrap_angle(err[ekf::kPsi]);
      const double e2 = err.head<2>().squaredNorm();
      ate.add(e2);
      heading.add(err[ekf::kPsi] * err[ekf::kPsi]);
      if (e.data.value("phase", std::string()) == "localization") ate_loc.add(e2);
      if (e.t > final_lo && e.t <= final_hi) ate_final.add(e2);
      if (e.data.contains("P")) {
        const Cov6 P = cov6_from_json(e.data.at("P"));
        Eigen::LDLT<Cov6> ldlt(P);
        if (ldlt.info() == Eigen::Success) nees.add(err.dot(ldlt.solve(err)));
      }
    } else if (e.ch == "detections") {
      const auto it = truth.find(e.t);
      if (it == truth.end()) continue;
      const ekf::StateVec xt = state_from_json(it->second);
      const Pose2 pose(xt[ekf::kPx], xt[ekf::kPy], xt[ekf::kPsi]);
      std::vector<Vec2> world;
      for (const auto& o : e.data.at("obs")) {
        const double r = o.at(0).get<double>(), b = o.at(1).get<double>();
        world.push_back(transform_point(pose, Vec2(r * std::cos(b), r * std::sin(b))));
      }
      std::vector<Vec2> visible;
      for (const Vec2& c : true_cones) {
        if ((c - pose.position()).norm() <= kDetectionRange) visible.push_back(c);
      }
      for (const Vec2& w : world) {
        bool hit = false;
        for (const Vec2& c : true_cones) hit = hit || (w - c).norm() <= kDetectionMatchRadius;
        det_tp.add(hit ? 1.0 : 0.0);
      }
      for (const Vec2& c : visible) {
        bool hit = false;
        for (const Vec2& w : world) hit = hit || (w - c).norm() <= kDetectionMatchRadius;
        rec_tp.add(hit ? 1.0 : 0.0);
      }
    } else if (e.ch == "failure") {
      m.diverged = m.diverged || e.data.value("reason", std::string()) == "divergence";
    } else if (e.ch == "loop_closure" && !m.loop_closure_time) {
      m.loop_closure_time = e.t;
    }
  }
  m.ate_rmse = ate.rms();
  m.heading_rmse = heading.rms();
  m.ate_localization = ate_loc.rms();
  m.ate_final_lap = ate_final.rms();
  m.mean_nees = nees.mean();
  m.detection_precision = det_tp.mean();
  m.detection_recall = rec_tp.mean();

  if (const LogEvent* map_event = log.last("map")) {
    std::vector<Vec2> cones;
    for (const auto& c : map_event->data.at("cones")) cones.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
    const MapScore score = score_map(cones, true_cones);
    m.landmark_rmse = score.rmse;
    m.map_precision = score.precision;
    m.map_recall = score.recall;
  }

  for (ekf::SensorKind kind : ekf::kAllSensorKinds) m.rejection_rate[std::string(ekf::sensor_name(kind))];
  if (const LogEvent* end = log.last("end"); end && end->data.contains("sensors")) {
    for (const auto& [name, c] : end->data.at("sensors").items()) {
      const auto n = c.value("evaluated", std::int64_t{0});
      m.rejection_rate[name] =
          n > 0 ? std::optional(static_cast<double>(c.value("rejected", std::int64_t{0})) / static_cast<double>(n))
                : std::nullopt;
    }
  }
  return m;
}

inline Json metrics_json(const Metrics& m) {
  const auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  Json j{{"ate_rmse", opt(m.ate_rmse)},
         {"heading_rmse", opt(m.heading_rmse)},
         {"ate_localization", opt(m.ate_localization)},
         {"ate_final_lap", opt(m.ate_final_lap)},
         {"landmark_rmse", opt(m.landmark_rmse)},
         {"map_precision", opt(m.map_precision)},
         {"map_recall", opt(m.map_recall)},
         {"detection_precision", opt(m.detection_precision)},
         {"detection_recall", opt(m.detection_recall)},
         {"mean_nees", opt(m.mean_nees)},
         {"laps_completed", m.laps_completed},
         {"loop_closure_time", opt(m.loop_closure_time)},
         {"estimate_count", m.estimate_count},
         {"diverged", m.diverged}};
  for (const auto& [name, rate] : m.rejection_rate) j["rejection_rate_" + name] = opt(rate);
  return j;
}

inline void save_metrics(const Metrics& m, const std::string& path) {
  auto os = io::open_output(path);
  os << metrics_json(m).dump(2) << '\n';
  if (!os) throw std::runtime_error("cannot write " + path);
}

}  // namespace fsd::harness
