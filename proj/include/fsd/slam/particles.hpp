#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fsd/core/pose2.hpp"
#include "fsd/core/rng.hpp"
#include "fsd/slam/landmark.hpp"

namespace fsd::slam {

struct Particle {
  Pose2 pose;
  double log_weight = 0.0;
  std::vector<Landmark> landmarks;
  SeededRng rng{0, 0};
};

struct ParticleSet {
  std::vector<Particle> particles;
  std::uint64_t epoch = 0;
  std::uint64_t seed = 0;
  SeededRng resample_rng{0, 0};

  std::size_t size() const { return particles.size(); }
};

inline std::uint64_t particle_stream(std::uint64_t epoch, std::size_t slot) {
  return mix_stream(mix_stream(0x736c616dULL, epoch), slot);
}

inline ParticleSet make_particle_set(std::size_t n, const Pose2& start, std::uint64_t seed) {
  if (n == 0) {
    throw std::invalid_argument("make_particle_set: need at least one particle");
  }
  ParticleSet ps;
  ps.seed = seed;
  ps.resample_rng = SeededRng(seed, mix_stream(0x72657361ULL, 0));
  ps.particles.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Particle p;
    p.pose = start;
    p.rng = SeededRng(seed, particle_stream(0, i));
    ps.particles.push_back(std::move(p));
  }
  return ps;
}

// exp-normalised weights; throws when no weight is usable.
template <typename LogWeights>
std::vector<double> normalize_log_weights(const LogWeights& log_weights) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (std::isnan(lw)) throw std::domain_error("normalize_log_weights: NaN log weight");
    peak = std::max(peak, lw);
  }
  if (!std::isfinite(peak)) {
    throw std::domain_error("normalize_log_weights: all weights are zero or non-finite");
  }
  std::vector<double> w;
  w.reserve(log_weights.size());
  double total = 0.0;
  for (double lw : log_weights) {
    w.push_back(std::exp(lw - peak));
    total += w.back();
  }
  for (double& x : w) x /= total;
  return w;
}

inline std::vector<double> normalized_weights(const ParticleSet& ps) {
  std::vector<double> lw;
  lw.reserve(ps.size());
  for (const Particle& p : ps.particles) lw.push_back(p.log_weight);
  return normalize_log_weights(lw);
}

inline double effective_sample_size(const std::vector<double>& w) {
  double sum_sq = 0.0;
  for (double x : w) sum_sq += x * x;
  return 1.0 / sum_sq;
}

// Systematic resampling: one offset u0 in [0, 1/N), stride 1/N. Returns the
// parent index of every offspring slot.
inline std::vector<std::size_t> systematic_resample_indices(const std::vector<double>& weights, double u0) {
  const std::size_t n = weights.size();
  const double stride = 1.0 / static_cast<double>(n);
  std::vector<std::size_t> parents;
  parents.reserve(n);
  double cumulative = weights[0];
  std::size_t i = 0;
  for (std::size_t m = 0; m < n; ++m) {
    const double u = u0 + static_cast<double>(m) * stride;
    while (u > cumulative && i + 1 < n) {
      ++i;
      cumulative += weights[i];
    }
    parents.push_back(i);
  }
  return parents;
}

struct ResampleReport {
  double n_eff = 0.0;
  bool resampled = false;
  std::vector<std::size_t> parents;  // filled when resampled
};

// Resamples when N_eff < N/2. Offspring get fresh rng streams so duplicated
// particles diverge afterwards.
inline ParticleSet resample(ParticleSet ps, ResampleReport* report = nullptr) {
  const std::vector<double> w = normalized_weights(ps);
  const double n_eff = effective_sample_size(w);
  const std::size_t n = ps.size();
  if (report) *report = {n_eff, false, {}};
  if (!(n_eff < 0.5 * static_cast<double>(n))) {
    // Renormalise in log space so weights stay bounded.
    for (std::size_t i = 0; i < n; ++i) ps.particles[i].log_weight = std::log(w[i]);
    return ps;
  }
  const double u0 = ps.resample_rng.uniform(0.0, 1.0 / static_cast<double>(n));
  const auto parents = systematic_resample_indices(w, u0);
  ++ps.epoch;
  std::vector<Particle> next;
  next.reserve(n);
  for (std::size_t slot = 0; slot < n; ++slot) {
    Particle child = ps.particles[parents[slot]];
    child.log_weight = 0.0;
    child.rng = SeededRng(ps.seed, particle_stream(ps.epoch, slot));
    next.push_back(std::move(child));
  }
  ps.particles = std::move(next);
  if (report) {
    report->resampled = true;
    report->parents = parents;
  }
  return ps;
}

inline std::size_t best_particle(const ParticleSet& ps) {
  if (ps.particles.empty()) {
    throw std::invalid_argument("best_particle: empty particle set");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < ps.size(); ++i) {
    if (ps.particles[i].log_weight > ps.particles[best].log_weight) best = i;
  }
  return best;
}

}  // namespace fsd::slam
