#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>

namespace lmo {

// One-dimensional problems embed in the plane with y = 0; every point is a
// 2-vector and every matrix 2x2, and the active dimension travels alongside.
using Point = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct SymEigen2 {
  std::array<double, 2> values;  // ascending
  Mat2 vectors;                  // columns are unit eigenvectors
};

inline SymEigen2 sym_eigen(const Mat2& m) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(0.5 * (m + m.transpose()));
  return {{es.eigenvalues()(0), es.eigenvalues()(1)}, es.eigenvectors()};
}

/// Symmetric square root of a symmetric positive-definite matrix.
inline Mat2 spd_sqrt(const Mat2& m) {
  const SymEigen2 e = sym_eigen(m);
  const Eigen::Vector2d s(std::sqrt(std::max(e.values[0], 0.0)), std::sqrt(std::max(e.values[1], 0.0)));
  return e.vectors * s.asDiagonal() * e.vectors.transpose();
}

/// Determinant of the leading `dim` x `dim` block.
inline double det_dim(const Mat2& m, int dim) { return dim == 1 ? m(0, 0) : m.determinant(); }

}  // namespace lmo
