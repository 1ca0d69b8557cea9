#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsd/core/pose2.hpp"
#include "fsd/io/csv.hpp"
#include "fsd/slam/particles.hpp"

namespace fsd::slam {

struct ConeMap {
  std::vector<Vec2> cones;
  std::vector<int> hits;
  std::size_t source = 0;  // particle the map was taken from

  std::size_t size() const { return cones.size(); }
  bool empty() const { return cones.empty(); }
};

// Greedily merges the closest pair closer than merge_distance, by hit-weighted
// average, until no such pair remains.
inline void merge_close_cones(ConeMap& map, double merge_distance) {
  const double limit2 = merge_distance * merge_distance;
  while (true) {
    double best = limit2;
    std::size_t bi = 0, bj = 0;
    bool found = false;
    for (std::size_t i = 0; i < map.cones.size(); ++i) {
      for (std::size_t j = i + 1; j < map.cones.size(); ++j) {
        const double d2 = (map.cones[i] - map.cones[j]).squaredNorm();
        if (d2 < best) {
          best = d2;
          bi = i;
          bj = j;
          found = true;
        }
      }
    }
    if (!found) return;
    const double wi = map.hits[bi];
    const double wj = map.hits[bj];
    map.cones[bi] = (wi * map.cones[bi] + wj * map.cones[bj]) / (wi + wj);
    map.hits[bi] += map.hits[bj];
    map.cones.erase(map.cones.begin() + static_cast<std::ptrdiff_t>(bj));
    map.hits.erase(map.hits.begin() + static_cast<std::ptrdiff_t>(bj));
  }
}

inline ConeMap particle_map(const ParticleSet& ps, std::size_t index, int min_hits, double merge_distance) {
  ConeMap map;
  map.source = index;
  for (const Landmark& lm : ps.particles.at(index).landmarks) {
    if (lm.hits >= min_hits) {
      map.cones.push_back(lm.mu);
      map.hits.push_back(lm.hits);
    }
  }
  merge_close_cones(map, merge_distance);
  return map;
}

// Map of the highest-weight particle.
inline ConeMap extract_map(const ParticleSet& ps, int min_hits, double merge_distance = 0.5) {
  if (ps.particles.empty()) {
    throw std::invalid_argument("extract_map: empty particle set");
  }
  return particle_map(ps, best_particle(ps), min_hits, merge_distance);
}

inline void save_map_csv(const ConeMap& map, const std::string& path) {
  auto out = io::open_output(path);
  out << "x,y,hits\n";
  for (std::size_t i = 0; i < map.size(); ++i) {
    out << io::format_double(map.cones[i].x()) << ',' << io::format_double(map.cones[i].y()) << ','
        << map.hits[i] << '\n';
  }
}

inline ConeMap load_map_csv(const std::string& path) {
  const auto lines = io::read_lines(path);
  if (lines.empty() || io::trim(lines.front()) != "x,y,hits") {
    throw std::runtime_error(path + ": missing 'x,y,hits' header");
  }
  ConeMap map;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = io::split_fields(lines[i]);
    const auto x = f.size() == 3 ? io::parse_double(f[0]) : std::nullopt;
    const auto y = f.size() == 3 ? io::parse_double(f[1]) : std::nullopt;
    const auto h = f.size() == 3 ? io::parse_double(f[2]) : std::nullopt;
    if (!x || !y || !h) {
      throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": expected x,y,hits");
    }
    map.cones.emplace_back(*x, *y);
    map.hits.push_back(static_cast<int>(*h));
  }
  return map;
}

}  // namespace fsd::slam
