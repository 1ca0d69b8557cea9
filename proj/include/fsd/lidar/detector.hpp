#pragma once

#include <cstddef>
#include <vector>

#include "fsd/lidar/clustering.hpp"
#include "fsd/lidar/cone_filter.hpp"
#include "fsd/lidar/point_cloud.hpp"

namespace fsd::lidar {

struct DetectorParams {
  double ground_z_min = 0.05;
  double ground_z_max = 0.50;
  double grid_cell = 0.25;
  std::size_t grid_min_points = 2;
  double link_distance = 0.20;
  ConeGeometryBounds bounds;
  RangeBearingNoise noise;
};

// Ground removal, grid ROIs, Euclidean refinement, cone acceptance test.
inline std::vector<ConeObservation> detect_cones(const PointCloud& raw, const DetectorParams& params) {
  const PointCloud cloud = remove_ground(raw, params.ground_z_min, params.ground_z_max);
  const auto rois = coarse_cluster(cloud, params.grid_cell, params.grid_min_points);
  const auto clusters = refine_clusters(cloud, rois, params.link_distance);
  return filter_cones(cloud, clusters, params.bounds, params.noise);
}

}  // namespace fsd::lidar
