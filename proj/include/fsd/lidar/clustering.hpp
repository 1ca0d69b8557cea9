#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fsd/lidar/point_cloud.hpp"

namespace fsd::lidar {

using GridCell = std::pair<std::int64_t, std::int64_t>;

// Stage-one region of interest: a connected blob of occupied grid cells.
struct Roi {
  std::vector<std::size_t> indices;  // ascending point indices
  std::vector<GridCell> cells;       // ascending cell keys
};

struct Cluster {
  std::vector<std::size_t> indices;  // ascending point indices
};

// Keeps points whose height lies in [z_min, z_max], preserving order.
inline PointCloud remove_ground(const PointCloud& cloud, double z_min, double z_max) {
  if (!(z_min < z_max)) {
    throw std::invalid_argument("remove_ground: z_min must be below z_max");
  }
  PointCloud out;
  out.t = cloud.t;
  out.points.reserve(cloud.points.size());
  for (const Point3& p : cloud.points) {
    if (p.z() >= z_min && p.z() <= z_max) {
      out.points.push_back(p);
    }
  }
  return out;
}

inline GridCell grid_cell_of(const Point3& p, double cell) {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell)),
          static_cast<std::int64_t>(std::floor(p.y() / cell))};
}

// Bins points into a planar grid, keeps cells holding at least min_pts points
// and returns the 8-connected components of the kept cells. Points in sparse
// cells are dropped.
inline std::vector<Roi> coarse_cluster(const PointCloud& cloud, double cell, std::size_t min_pts) {
  if (!(cell > 0.0)) {
    throw std::invalid_argument("coarse_cluster: cell size must be positive");
  }
  std::map<GridCell, std::vector<std::size_t>> grid;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    grid[grid_cell_of(cloud.points[i], cell)].push_back(i);
  }

  std::map<GridCell, bool> occupied;  // value: visited
  for (const auto& [key, members] : grid) {
    if (members.size() >= min_pts) {
      occupied.emplace(key, false);
    }
  }

  std::vector<Roi> rois;
  std::vector<GridCell> stack;
  for (auto& [seed, seed_visited] : occupied) {
    if (seed_visited) continue;
    seed_visited = true;
    Roi roi;
    stack.assign(1, seed);
    while (!stack.empty()) {
      const GridCell c = stack.back();
      stack.pop_back();
      roi.cells.push_back(c);
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
          if (dx == 0 && dy == 0) continue;
          auto it = occupied.find({c.first + dx, c.second + dy});
          if (it != occupied.end() && !it->second) {
            it->second = true;
            stack.push_back(it->first);
          }
        }
      }
    }
    std::sort(roi.cells.begin(), roi.cells.end());
    for (const GridCell& c : roi.cells) {
      const auto& members = grid.at(c);
      roi.indices.insert(roi.indices.end(), members.begin(), members.end());
    }
    std::sort(roi.indices.begin(), roi.indices.end());
    rois.push_back(std::move(roi));
  }
  return rois;
}

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

// Single-linkage Euclidean clustering of an index subset. Clusters are
// ordered by their smallest member index.
inline std::vector<Cluster> single_linkage(const PointCloud& cloud, const std::vector<std::size_t>& subset,
                                           double link_dist) {
  const std::size_t n = subset.size();
  const double link2 = link_dist * link_dist;
  detail::DisjointSets sets(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if ((cloud.points[subset[a]] - cloud.points[subset[b]]).squaredNorm() <= link2) {
        sets.unite(a, b);
      }
    }
  }
  std::map<std::size_t, Cluster> by_root;
  for (std::size_t a = 0; a < n; ++a) {
    by_root[sets.find(a)].indices.push_back(subset[a]);
  }
  std::vector<Cluster> clusters;
  clusters.reserve(by_root.size());
  for (auto& [root, cluster] : by_root) {
    std::sort(cluster.indices.begin(), cluster.indices.end());
    clusters.push_back(std::move(cluster));
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.indices.front() < b.indices.front(); });
  return clusters;
}

// Stage two: Euclidean refinement inside each ROI, results in ROI order.
inline std::vector<Cluster> refine_clusters(const PointCloud& cloud, const std::vector<Roi>& rois,
                                            double link_dist) {
  if (!(link_dist > 0.0)) {
    throw std::invalid_argument("refine_clusters: link distance must be positive");
  }
  std::vector<Cluster> out;
  for (const Roi& roi : rois) {
    auto clusters = single_linkage(cloud, roi.indices, link_dist);
    out.insert(out.end(), std::make_move_iterator(clusters.begin()), std::make_move_iterator(clusters.end()));
  }
  return out;
}

}  // namespace fsd::lidar
