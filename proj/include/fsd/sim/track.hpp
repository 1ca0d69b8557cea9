#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fsd/core/angle.hpp"
#include "fsd/core/pose2.hpp"
#include "fsd/core/rng.hpp"
#include "fsd/io/csv.hpp"

namespace fsd::sim {

struct TrackProjection {
  double s = 0.0;        // arc length of the closest centerline point
  double lateral = 0.0;  // signed offset, positive to the left
  std::size_t segment = 0;
};

// Closed race track. The centerline repeats its first vertex at the end.
struct Track {
  std::vector<Vec2> centerline;
  std::vector<double> arc;  // cumulative arc length per centerline vertex
  double width = 0.0;
  std::vector<Vec2> left;
  std::vector<Vec2> right;

  double length() const { return arc.empty() ? 0.0 : arc.back(); }
  std::size_t segments() const { return centerline.empty() ? 0 : centerline.size() - 1; }

  std::vector<Vec2> all_cones() const {
    std::vector<Vec2> cones = left;
    cones.insert(cones.end(), right.begin(), right.end());
    return cones;
  }

  void rebuild_arc() {
    arc.assign(centerline.size(), 0.0);
    for (std::size_t i = 1; i < centerline.size(); ++i) {
      arc[i] = arc[i - 1] + (centerline[i] - centerline[i - 1]).norm();
    }
  }

  // Centerline point at arc length s (taken modulo the lap length).
  Vec2 point_at(double s) const {
    const auto [i, f] = locate(s);
    return centerline[i] + f * (centerline[i + 1] - centerline[i]);
  }

  double heading_at(double s) const {
    const auto [i, f] = locate(s);
    const Vec2 d = centerline[i + 1] - centerline[i];
    return std::atan2(d.y(), d.x());
  }

  Pose2 start_pose() const { return {centerline.front(), heading_at(0.0)}; }

  TrackProjection project(const Vec2& p) const {
    TrackProjection best;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < centerline.size(); ++i) {
      const Vec2 a = centerline[i];
      const Vec2 d = centerline[i + 1] - a;
      const double len2 = d.squaredNorm();
      const double f = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
      const Vec2 q = a + f * d;
      const double d2 = (p - q).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best.segment = i;
        best.s = arc[i] + f * std::sqrt(len2);
        const double cross = d.x() * (p - a).y() - d.y() * (p - a).x();
        best.lateral = (cross >= 0.0 ? 1.0 : -1.0) * std::sqrt(d2);
      }
    }
    return best;
  }

 private:
  std::pair<std::size_t, double> locate(double s) const {
    const double L = length();
    s = std::fmod(s, L);
    if (s < 0.0) s += L;
    auto it = std::upper_bound(arc.begin(), arc.end(), s);
    std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - arc.begin()) - 1));
    i = std::min(i, centerline.size() - 2);
    const double seg = arc[i + 1] - arc[i];
    return {i, seg > 0.0 ? (s - arc[i]) / seg : 0.0};
  }
};

namespace detail {

// Second-derivative coefficients of a periodic cubic spline through y at unit spacing.
inline Eigen::VectorXd periodic_spline_moments(const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, (i + n - 1) % n) += 1.0;
    A(i, i) += 4.0;
    A(i, (i + 1) % n) += 1.0;
    rhs[i] = 6.0 * (y[(i + 1) % n] - 2.0 * y[i] + y[(i + n - 1) % n]);
  }
  return A.partialPivLu().solve(rhs);
}

inline double eval_spline(const Eigen::VectorXd& y, const Eigen::VectorXd& m, double u) {
  const Eigen::Index n = y.size();
  const auto i = static_cast<Eigen::Index>(std::floor(u)) % n;
  const Eigen::Index j = (i + 1) % n;
  const double t = u - std::floor(u);
  const double a = 1.0 - t;
  return a * y[i] + t * y[j] + ((a * a * a - a) * m[i] + (t * t * t - t) * m[j]) / 6.0;
}

inline std::vector<Vec2> resample_closed(const std::vector<Vec2>& dense, double spacing) {
  std::vector<double> s(dense.size(), 0.0);
  for (std::size_t i = 1; i < dense.size(); ++i) s[i] = s[i - 1] + (dense[i] - dense[i - 1]).norm();
  const double L = s.back();
  const auto n = static_cast<std::size_t>(std::max(8.0, std::round(L / spacing)));
  std::vector<Vec2> out;
  out.reserve(n + 1);
  std::size_t j = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double target = L * static_cast<double>(k) / static_cast<double>(n);
    while (j + 2 < dense.size() && s[j + 1] < target) ++j;
    const double seg = s[j + 1] - s[j];
    const double f = seg > 0.0 ? (target - s[j]) / seg : 0.0;
    out.push_back(dense[j] + f * (dense[j + 1] - dense[j]));
  }
  out.push_back(out.front());
  return out;
}

}  // namespace detail

class TrackGenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrackShape {
  int control_points = 10;
  double radius_jitter = 0.25;  // relative
  double angle_jitter = 0.25;   // fraction of the control-point angular pitch
  double vertex_spacing = 0.25; // m
  int max_attempts = 20;
};

// Minimum distance between centerline points that are far apart along the track.
inline double min_non_local_clearance(const Track& track, double arc_gap) {
  const std::size_t n = track.segments();
  const double L = track.length();
  const std::size_t stride = std::max<std::size_t>(1, n / 400);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; i += stride) {
    for (std::size_t j = i + stride; j < n; j += stride) {
      double ds = std::abs(track.arc[j] - track.arc[i]);
      ds = std::min(ds, L - ds);
      if (ds < arc_gap) continue;
      best = std::min(best, (track.centerline[i] - track.centerline[j]).norm());
    }
  }
  return best;
}

inline double min_turn_radius(const Track& track) {
  const std::size_t n = track.segments();
  const double L = track.length();
  // Heading change over a window of roughly one metre.
  const std::size_t w = std::max<std::size_t>(1, static_cast<std::size_t>(std::round(1.0 / (L / n))));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = track.centerline[(i + 1) % n] - track.centerline[i];
    const Vec2 b = track.centerline[(i + w + 1) % n] - track.centerline[(i + w) % n];
    const double dpsi = std::abs(wrap_angle(std::atan2(b.y(), b.x()) - std::atan2(a.y(), a.x())));
    const double ds = L * static_cast<double>(w) / static_cast<double>(n);
    if (dpsi > 0.0) best = std::min(best, ds / dpsi);
  }
  return best;
}

inline Track generate_track(std::uint64_t seed, double target_length, double width, double cone_spacing,
                            const TrackShape& shape = {}) {
  if (!(target_length > 0.0) || !(width > 0.0) || !(cone_spacing > 0.0)) {
    throw std::invalid_argument("generate_track: length, width and cone spacing must be positive");
  }
  const int K = shape.control_points;
  for (int attempt = 0; attempt < shape.max_attempts; ++attempt) {
    SeededRng rng(seed, mix_stream(0x7472616bULL, static_cast<std::uint64_t>(attempt)));
    Eigen::VectorXd cx(K), cy(K);
    for (int k = 0; k < K; ++k) {
      const double pitch = kTwoPi / K;
      const double theta = pitch * (k + shape.angle_jitter * rng.uniform(-0.5, 0.5));
      const double rho = 1.0 + rng.uniform(-shape.radius_jitter, shape.radius_jitter);
      cx[k] = rho * std::cos(theta);
      cy[k] = rho * std::sin(theta);
    }
    const Eigen::VectorXd mx = detail::periodic_spline_moments(cx);
    const Eigen::VectorXd my = detail::periodic_spline_moments(cy);

    constexpr int kDensePerSegment = 400;
    std::vector<Vec2> dense;
    dense.reserve(static_cast<std::size_t>(K * kDensePerSegment + 1));
    for (int i = 0; i <= K * kDensePerSegment; ++i) {
      const double u = static_cast<double>(i) / kDensePerSegment;
      dense.emplace_back(detail::eval_spline(cx, mx, u), detail::eval_spline(cy, my, u));
    }
    dense.back() = dense.front();
    double unit_length = 0.0;
    for (std::size_t i = 1; i < dense.size(); ++i) unit_length += (dense[i] - dense[i - 1]).norm();
    const double scale = target_length / unit_length;
    for (Vec2& p : dense) p *= scale;

    Track track;
    track.width = width;
    track.centerline = detail::resample_closed(dense, shape.vertex_spacing);
    track.rebuild_arc();

    if (min_turn_radius(track) < width || min_non_local_clearance(track, kPi * 2.0 * width) < 2.0 * width) {
      continue;
    }

    const auto stations = static_cast<std::size_t>(std::ceil(track.length() / cone_spacing - 1e-9));
    for (std::size_t k = 0; k < stations; ++k) {
      const double s = track.length() * static_cast<double>(k) / static_cast<double>(stations);
      const Vec2 c = track.point_at(s);
      const double psi = track.heading_at(s);
      const Vec2 nrm(-std::sin(psi), std::cos(psi));
      track.left.push_back(c + 0.5 * width * nrm);
      track.right.push_back(c - 0.5 * width * nrm);
    }
    return track;
  }
  throw TrackGenerationError("generate_track: no feasible track after " + std::to_string(shape.max_attempts) +
                             " attempts");
}

inline void save_track_csv(const Track& track, const std::string& path) {
  auto out = io::open_output(path);
  out << "side,x,y\n";
  for (const Vec2& p : track.centerline) {
    out << "center," << io::format_double(p.x()) << ',' << io::format_double(p.y()) << '\n';
  }
  for (const Vec2& p : track.left) {
    out << "left," << io::format_double(p.x()) << ',' << io::format_double(p.y()) << '\n';
  }
  for (const Vec2& p : track.right) {
    out << "right," << io::format_double(p.x()) << ',' << io::format_double(p.y()) << '\n';
  }
}

inline Track load_track_csv(const std::string& path) {
  const auto lines = io::read_lines(path);
  if (lines.empty() || io::trim(lines.front()) != "side,x,y") {
    throw std::runtime_error(path + ": missing 'side,x,y' header");
  }
  Track track;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = io::split_fields(lines[i]);
    const auto x = f.size() == 3 ? io::parse_double(f[1]) : std::nullopt;
    const auto y = f.size() == 3 ? io::parse_double(f[2]) : std::nullopt;
    if (!x || !y) {
      throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": expected side,x,y");
    }
    const auto side = io::trim(f[0]);
    if (side == "center") track.centerline.emplace_back(*x, *y);
    else if (side == "left") track.left.emplace_back(*x, *y);
    else if (side == "right") track.right.emplace_back(*x, *y);
    else throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": unknown side");
  }
  track.rebuild_arc();
  if (!track.left.empty() && track.left.size() == track.right.size()) {
    double sum = 0.0;
    for (std::size_t i = 0; i < track.left.size(); ++i) sum += (track.left[i] - track.right[i]).norm();
    track.width = sum / static_cast<double>(track.left.size());
  }
  return track;
}

}  // namespace fsd::sim
