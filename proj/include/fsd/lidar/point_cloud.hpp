#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fsd/io/csv.hpp"

namespace fsd::lidar {

using Point3 = Eigen::Vector3d;

// Sensor-frame points; z is height above the (flat) ground.
struct PointCloud {
  double t = 0.0;
  std::vector<Point3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

inline void save_cloud_csv(const PointCloud& cloud, const std::string& path) {
  auto out = io::open_output(path);
  for (const Point3& p : cloud.points) {
    out << io::format_double(p.x()) << ',' << io::format_double(p.y()) << ',' << io::format_double(p.z())
        << '\n';
  }
}

// Reads "x,y,z" lines. A leading non-numeric header line is skipped.
inline PointCloud load_cloud_csv(const std::string& path, double t = 0.0) {
  PointCloud cloud;
  cloud.t = t;
  const auto lines = io::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto fields = io::split_fields(lines[i]);
    if (fields.size() != 3) {
      throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": expected x,y,z");
    }
    const auto x = io::parse_double(fields[0]);
    const auto y = io::parse_double(fields[1]);
    const auto z = io::parse_double(fields[2]);
    if (!x || !y || !z) {
      if (i == 0) continue;
      throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": non-numeric field");
    }
    if (!std::isfinite(*x) || !std::isfinite(*y) || !std::isfinite(*z)) {
      throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": non-finite coordinate");
    }
    cloud.points.emplace_back(*x, *y, *z);
  }
  return cloud;
}

}  // namespace fsd::lidar
