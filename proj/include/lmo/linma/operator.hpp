#pragma once

#include "lmo/core/bounds.hpp"
#include "lmo/core/linalg.hpp"
#include "lmo/linma/tensor_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace lmo {

/// Pointwise L u = W11 u_xx + 2 W12 u_xy + W22 u_yy with centered
/// differences. Nodes where W is invalid or u lacks a 3x3 stencil get NaN
/// and are tagged boundary in the result's grid so they stay visible.
inline ScalarField apply_Lw(const TensorField& w, const ScalarField& u) {
  if (!w.grid().same_lattice(u.grid())) throw InvalidInput("apply_Lw needs W and u on the same lattice");
  std::vector<double> out(u.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!u.grid().is_active(i) || !w.valid(i)) continue;
    const auto h = u.node_hessian(i);
    if (!h) continue;
    out[i] = (w.at(i).cwiseProduct(*h)).sum();
  }
  return ScalarField(u.grid_ptr(), std::move(out));
}

/// max over nodes and columns j of |sum_i D_i W_ij| with centered first
/// differences; only nodes whose axis neighbours carry valid W contribute.
inline double divergence_residual(const TensorField& w) {
  const Grid& g = w.grid();
  const double h2 = 2.0 * g.spacing();
  double worst = 0.0;
  for (std::size_t idx = 0; idx < w.size(); ++idx) {
    if (!w.valid(idx)) continue;
    const int i = g.ix(idx);
    const int j = g.iy(idx);
    auto ok = [&](int a, int b) { return g.in_range(a, b) && w.valid(g.index(a, b)); };
    if (!ok(i - 1, j) || !ok(i + 1, j)) continue;
    const std::size_t e = g.index(i + 1, j);
    const std::size_t west = g.index(i - 1, j);
    if (g.dim() == 1) {
      worst = std::max(worst, std::abs((w.w11(e) - w.w11(west)) / h2));
      continue;
    }
    if (!ok(i, j - 1) || !ok(i, j + 1)) continue;
    const std::size_t n = g.index(i, j + 1);
    const std::size_t s = g.index(i, j - 1);
    const double c1 = (w.w11(e) - w.w11(west)) / h2 + (w.w12(n) - w.w12(s)) / h2;
    const double c2 = (w.w12(e) - w.w12(west)) / h2 + (w.w22(n) - w.w22(s)) / h2;
    worst = std::max({worst, std::abs(c1), std::abs(c2)});
  }
  return worst;
}

struct EllipticityReport {
  bool pass = true;
  std::size_t nodes = 0;
  std::size_t violations = 0;
  std::optional<std::size_t> first_violation;
  double min_det = std::numeric_limits<double>::infinity();
  double max_det = -std::numeric_limits<double>::infinity();
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  double max_eigenvalue = -std::numeric_limits<double>::infinity();
  double max_eigen_ratio = 1.0;
  bool degenerate = false;  // eigenvalue ratio at or above the flag threshold somewhere
};

/// Checks lambda^{n-1} <= det W <= Lambda^{n-1} at every valid node with an
/// absolute slack, and records the eigenvalue spread. Violations are
/// reported, not thrown.
inline EllipticityReport ellipticity_check(const TensorField& w, const EllipticityBounds& b, double slack = 1e-8,
                                           double degeneracy_ratio = 10.0) {
  EllipticityReport r;
  const int n = w.grid().dim();
  const double lo = std::pow(b.lambda, n - 1);
  const double hi = std::pow(b.Lambda, n - 1);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!w.valid(i)) continue;
    ++r.nodes;
    const Mat2 m = w.at(i);
    const double d = det_dim(m, n);
    r.min_det = std::min(r.min_det, d);
    r.max_det = std::max(r.max_det, d);
    double emin = m(0, 0);
    double emax = m(0, 0);
    if (n == 2) {
      const SymEigen2 e = sym_eigen(m);
      emin = e.values[0];
      emax = e.values[1];
    }
    r.min_eigenvalue = std::min(r.min_eigenvalue, emin);
    r.max_eigenvalue = std::max(r.max_eigenvalue, emax);
    if (emin > 0.0) r.max_eigen_ratio = std::max(r.max_eigen_ratio, emax / emin);
    else r.max_eigen_ratio = std::numeric_limits<double>::infinity();
    if (d < lo - slack || d > hi + slack) {
      ++r.violations;
      if (!r.first_violation) r.first_violation = i;
    }
  }
  r.pass = r.violations == 0;
  r.degenerate = r.max_eigen_ratio >= degeneracy_ratio;
  return r;
}

}  // namespace lmo
