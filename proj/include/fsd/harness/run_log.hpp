#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsd/core/pose2.hpp"
#include "fsd/ekf/types.hpp"
#include "fsd/io/csv.hpp"

namespace fsd::harness {

using Json = nlohmann::json;

struct LogEvent {
  double t = 0.0;
  std::string ch;
  Json data;
};

// Ordered event stream of one run. Invariant: t is non-decreasing.
class RunLog {
 public:
  void append(double t, std::string ch, Json data = Json::object()) {
    if (!events_.empty() && t < events_.back().t) {
      throw std::logic_error("RunLog: event time went backwards on channel " + ch);
    }
    events_.push_back({t, std::move(ch), std::move(data)});
  }

  const std::vector<LogEvent>& events() const { return events_; }
  bool empty() const { return events_.empty(); }
  std::size_t size() const { return events_.size(); }

  std::size_t count(std::string_view ch) const {
    std::size_t n = 0;
    for (const auto& e : events_) n += e.ch == ch ? 1 : 0;
    return n;
  }

  const LogEvent* last(std::string_view ch) const {
    for (auto it = events_.rbegin(); it != events_.rend(); ++it) {
      if (it->ch == ch) return &*it;
    }
    return nullptr;
  }

 private:
  std::vector<LogEvent> events_;
};

inline std::string event_line(const LogEvent& e) {
  Json t = e.t;
  Json ch = e.ch;
  return "{\"t\":" + t.dump() + ",\"ch\":" + ch.dump() + ",\"data\":" + e.data.dump() + "}";
}

inline void write_jsonl(const RunLog& log, std::ostream& os) {
  for (const auto& e : log.events()) os << event_line(e) << '\n';
}

inline void save_jsonl(const RunLog& log, const std::filesystem::path& path) {
  auto os = io::open_output(path.string());
  write_jsonl(log, os);
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

inline RunLog read_jsonl(std::istream& is) {
  RunLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw std::runtime_error("run log line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("t") || !j.contains("ch") || !j["t"].is_number() || !j["ch"].is_string()) {
      throw std::runtime_error("run log line " + std::to_string(lineno) + ": expected {t, ch, data}");
    }
    log.append(j["t"].get<double>(), j["ch"].get<std::string>(), j.value("data", Json::object()));
  }
  return log;
}

inline RunLog load_jsonl(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_jsonl(is);
}

// Payload helpers shared by the runner and the evaluator.

inline Json pose_json(const Pose2& p) { return Json::array({p.x(), p.y(), p.psi()}); }

inline Pose2 pose_from_json(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

inline Json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

// Row-major flattening.
inline Json matrix_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

inline ekf::StateVec state_from_json(const Json& j) {
  ekf::StateVec x;
  for (int i = 0; i < 6; ++i) x[i] = j.at(i).get<double>();
  return x;
}

inline Cov6 cov6_from_json(const Json& j) {
  Cov6 P;
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) P(r, c) = j.at(6 * r + c).get<double>();
  }
  return P;
}

}  // namespace fsd::harness
