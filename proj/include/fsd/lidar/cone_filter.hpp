#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "fsd/core/angle.hpp"
#include "fsd/core/covariance.hpp"
#include "fsd/core/pose2.hpp"
#include "fsd/lidar/clustering.hpp"

namespace fsd::lidar {

struct ConeGeometryBounds {
  std::size_t min_points = 3;
  std::size_t max_points = 200;
  double max_width = 0.40;   // horizontal extent, m
  double max_height = 0.50;  // vertical extent, m
};

// sigma_r(range) = base + slope * range; bearing noise is constant.
struct RangeBearingNoise {
  double range_base = 0.05;
  double range_slope = 0.01;
  double bearing = 0.0175;

  Cov2 covariance(double range) const {
    const double sr = range_base + range_slope * range;
    Cov2 R = Cov2::Zero();
    R(0, 0) = sr * sr;
    R(1, 1) = bearing * bearing;
    return R;
  }
};

struct ConeObservation {
  double t = 0.0;
  double range = 0.0;
  double bearing = 0.0;
  Cov2 R = Cov2::Identity();
  std::size_t support = 0;

  Vec2 sensor_point() const { return {range * std::cos(bearing), range * std::sin(bearing)}; }
};

struct ClusterShape {
  Vec2 centroid = Vec2::Zero();
  double width = 0.0;   // largest horizontal distance between two members
  double height = 0.0;  // z span
};

inline ClusterShape cluster_shape(const PointCloud& cloud, const Cluster& cluster) {
  ClusterShape shape;
  double z_lo = std::numeric_limits<double>::infinity();
  double z_hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i : cluster.indices) {
    const Point3& p = cloud.points[i];
    shape.centroid += p.head<2>();
    z_lo = std::min(z_lo, p.z());
    z_hi = std::max(z_hi, p.z());
  }
  shape.centroid /= static_cast<double>(cluster.indices.size());
  shape.height = z_hi - z_lo;
  double w2 = 0.0;
  for (std::size_t a = 0; a < cluster.indices.size(); ++a) {
    for (std::size_t b = a + 1; b < cluster.indices.size(); ++b) {
      const Vec2 d = cloud.points[cluster.indices[a]].head<2>() - cloud.points[cluster.indices[b]].head<2>();
      w2 = std::max(w2, d.squaredNorm());
    }
  }
  shape.width = std::sqrt(w2);
  return shape;
}

inline std::vector<ConeObservation> filter_cones(const PointCloud& cloud, const std::vector<Cluster>& clusters,
                                                 const ConeGeometryBounds& bounds,
                                                 const RangeBearingNoise& noise) {
  std::vector<ConeObservation> out;
  for (const Cluster& cluster : clusters) {
    const std::size_t n = cluster.indices.size();
    if (n < bounds.min_points || n > bounds.max_points) continue;
    const ClusterShape shape = cluster_shape(cloud, cluster);
    if (shape.width > bounds.max_width || shape.height > bounds.max_height) continue;
    const double range = shape.centroid.norm();
    if (!(range > 0.0)) continue;

    ConeObservation obs;
    obs.t = cloud.t;
    obs.range = range;
    obs.bearing = wrap_angle(std::atan2(shape.centroid.y(), shape.centroid.x()));
    obs.R = noise.covariance(range);
    obs.support = n;
    out.push_back(obs);
  }
  return out;
}

}  // namespace fsd::lidar
