#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

namespace fsd {

using Cov2 = Eigen::Matrix2d;
using Cov3 = Eigen::Matrix3d;
using Cov6 = Eigen::Matrix<double, 6, 6>;

template <typename Derived>
auto symmetrize(const Eigen::MatrixBase<Derived>& m) {
  using Plain = typename Derived::PlainObject;
  return Plain(0.5 * (m + m.transpose()));
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m, double rel_tol = 1e-9) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

template <typename Derived>
double min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  using Plain = typename Derived::PlainObject;
  Eigen::SelfAdjointEigenSolver<Plain> solver(symmetrize(m), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

template <typename Derived>
bool is_psd(const Eigen::MatrixBase<Derived>& m, double tol = 1e-9) {
  return is_symmetric(m) && min_eigenvalue(m) >= -tol;
}

// Ratio of largest to smallest eigenvalue magnitude; infinite when singular.
template <typename Derived>
double condition_number(const Eigen::MatrixBase<Derived>& m) {
  using Plain = typename Derived::PlainObject;
  Eigen::SelfAdjointEigenSolver<Plain> solver(symmetrize(m), Eigen::EigenvaluesOnly);
  const auto ev = solver.eigenvalues().cwiseAbs();
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return hi / lo;
}

}  // namespace fsd
