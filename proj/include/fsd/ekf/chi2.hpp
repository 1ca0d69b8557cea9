#pragma once

#include <limits>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace fsd::ekf {

// Inverse chi-square CDF for arbitrary degrees of freedom.
inline double chi2_quantile(double dof, double p) {
  if (!(dof > 0.0) || !(p > 0.0) || !(p < 1.0)) {
    throw std::invalid_argument("chi2_quantile: need dof > 0 and p in (0, 1)");
  }
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), p);
}

// Mahalanobis gate for an innovation with `dof` components at acceptance probability p.
inline double chi2_gate(int dof, double p) {
  if (dof < 1 || dof > 3) {
    throw std::invalid_argument("chi2_gate: dof must be 1, 2 or 3");
  }
  if (!(p > 0.5) || !(p < 1.0)) {
    throw std::invalid_argument("chi2_gate: p must lie in (0.5, 1)");
  }
  return chi2_quantile(dof, p);
}

}  // namespace fsd::ekf
