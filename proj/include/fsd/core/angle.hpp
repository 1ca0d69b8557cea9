#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fsd {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Maps theta onto the canonical interval (-pi, pi].
inline double wrap_angle(double theta) {
  if (!std::isfinite(theta)) {
    throw std::domain_error("wrap_angle: non-finite angle");
  }
  double r = std::remainder(theta, kTwoPi);
  if (r <= -kPi) {
    r += kTwoPi;
  }
  return r;
}

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }

}  // namespace fsd
