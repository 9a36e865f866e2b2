#pragma once

#include "lmo/core/error.hpp"
#include "lmo/core/linalg.hpp"
#include "lmo/geometry/grid.hpp"
#include "lmo/geometry/scalar_field.hpp"
#include "lmo/linma/tensor_field.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace lmo {

/// How a stencil arm that leaves the unknown set is closed.
enum class BoundaryMode {
  kShortleyWeller,  // cut the arm at the domain boundary, Dirichlet value at the crossing
  kLattice,         // Dirichlet value at the first non-interior lattice node
};

using BoundaryFn = std::function<double(const Point&)>;

/// Boundary values read from the nearest lattice node of a field.
inline BoundaryFn node_values(const ScalarField& f) {
  return [&f](const Point& p) {
    const Point q = f.grid().lattice_coords(p);
    const int i = static_cast<int>(std::lround(q.x()));
    const int j = f.grid().dim() == 1 ? 0 : static_cast<int>(std::lround(q.y()));
    if (!f.grid().in_range(i, j)) throw InvalidInput("boundary value requested outside the field");
    return f.at(i, j);
  };
}

/// Unknown numbering of the interior nodes (row-major); -1 elsewhere.
inline std::vector<int> number_interior(const Grid& g, std::vector<std::size_t>* nodes = nullptr) {
  std::vector<int> unknown(g.size(), -1);
  int k = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.is_interior(i)) continue;
    unknown[i] = k++;
    if (nodes) nodes->push_back(i);
  }
  return unknown;
}

/// Nonuniform three-point second difference along a lattice direction v,
/// scaled to approximate v^T D^2u v:
///   |v|^2 * 2/(l+ + l-) * [(u+ - u)/l+ - (u - u-)/l-].
/// Exact on quadratics whatever the arm lengths.
struct SecondDifference {
  double center = 0.0;
  double weight[2] = {0.0, 0.0};  // plus, minus
  int unknown[2] = {-1, -1};      // unknown index of each arm end, -1 if fixed
  double fixed_value[2] = {0.0, 0.0};
  double arm[2] = {0.0, 0.0};     // physical arm lengths

  /// Contribution of the fixed arm ends.
  double constant() const {
    return (unknown[0] < 0 ? weight[0] * fixed_value[0] : 0.0) + (unknown[1] < 0 ? weight[1] * fixed_value[1] : 0.0);
  }

  template <class Values>
  double apply(double u_center, const Values& u) const {
    double s = center * u_center + constant();
    for (int k = 0; k < 2; ++k) {
      if (unknown[k] >= 0) s += weight[k] * u[unknown[k]];
    }
    return s;
  }
};

inline SecondDifference second_difference(const Grid& g, const std::vector<int>& unknown, std::size_t idx, Offset v,
                                          BoundaryMode mode, const BoundaryFn& bc) {
  SecondDifference d;
  const double h = g.spacing();
  const double vlen = v.norm();
  const Point x = g.point(idx);
  for (int k = 0; k < 2; ++k) {
    const Offset s = k == 0 ? v : Offset{-v.dx, -v.dy};
    const int i = g.ix(idx) + s.dx;
    const int j = g.iy(idx) + s.dy;
    const bool inside = g.in_range(i, j);
    if (inside && unknown[g.index(i, j)] >= 0) {
      d.unknown[k] = unknown[g.index(i, j)];
      d.arm[k] = vlen * h;
      continue;
    }
    if (mode == BoundaryMode::kLattice) {
      d.arm[k] = vlen * h;
      d.fixed_value[k] = bc(x + h * s.vec());
      continue;
    }
    if (!g.domain()) throw InvalidInput("boundary crossings need a grid with a domain");
    const Point e = s.vec() / vlen;
    const double t = std::min(g.domain()->exit_distance(x, e), vlen * h);
    d.arm[k] = std::max(t, 1e-12 * h);
    d.fixed_value[k] = bc(x + d.arm[k] * e);
  }
  const double lp = d.arm[0];
  const double lm = d.arm[1];
  const double scale = vlen * vlen * 2.0 / (lp + lm);
  d.weight[0] = scale / lp;
  d.weight[1] = scale / lm;
  d.center = -(d.weight[0] + d.weight[1]);
  return d;
}

/// A nonnegative combination sum_v c_v v v^T of lattice directions.
struct DirectionalTerm {
  Offset dir;
  double coeff;
};

struct StencilDecomposition {
  std::vector<DirectionalTerm> terms;
  bool fallback = false;  // eigen-direction scheme was used
};

/// Lattice direction within the given width closest in angle to `e`.
inline Offset nearest_lattice_direction(const Point& e, int width) {
  Offset best{1, 0};
  double best_cos = -1.0;
  for (int dy = 0; dy <= width; ++dy) {
    for (int dx = -width; dx <= width; ++dx) {
      if (dy == 0 && dx <= 0) continue;
      if (std::gcd(std::abs(dx), dy) != 1) continue;
      const Offset o{dx, dy};
      const double c = std::abs(o.vec().dot(e)) / o.norm();
      if (c > best_cos + 1e-14) {
        best_cos = c;
        best = o;
      }
    }
  }
  return best;
}

/// Writes W as nonnegative weights on lattice directions.
///
/// When |W12| <= min(W11, W22) the nine-point split is exact:
///   W12 >= 0: (W11-W12) e1 + (W22-W12) e2 + W12 (1,1),
///   W12 <  0: (W11+W12) e1 + (W22+W12) e2 - W12 (1,-1).
/// Otherwise each eigenpair (lambda, q) of W becomes lambda/|v|^2 on the
/// lattice direction v nearest q within `width`. A matrix with a negative
/// eigenvalue cannot be repaired.
inline StencilDecomposition decompose_tensor(const Mat2& w, int dim, int width) {
  StencilDecomposition out;
  const double scale = std::max({std::abs(w(0, 0)), std::abs(w(1, 1)), std::abs(w(0, 1)), 1e-300});
  if (dim == 1) {
    if (w(0, 0) < -1e-12 * scale) throw NonMonotoneStencil("negative coefficient in one-dimensional operator");
    out.terms.push_back({{1, 0}, std::max(w(0, 0), 0.0)});
    return out;
  }
  const double a = w(0, 0);
  const double b = w(1, 1);
  const double c = 0.5 * (w(0, 1) + w(1, 0));
  if (std::abs(c) <= std::min(a, b)) {
    if (c >= 0) {
      out.terms = {{{1, 0}, a - c}, {{0, 1}, b - c}, {{1, 1}, c}};
    } else {
      out.terms = {{{1, 0}, a + c}, {{0, 1}, b + c}, {{1, -1}, -c}};
    }
    return out;
  }
  const SymEigen2 e = sym_eigen(w);
  if (e.values[0] < -1e-12 * scale) throw NonMonotoneStencil("coefficient matrix is not positive semidefinite");
  out.fallback = true;
  for (int k = 0; k < 2; ++k) {
    const Offset v = nearest_lattice_direction(e.vectors.col(k), width);
    const double lam = std::max(e.values[k], 0.0);
    const double v2 = v.vec().squaredNorm();
    bool merged = false;
    for (auto& t : out.terms) {
      if (t.dir == v) {
        t.coeff += lam / v2;
        merged = true;
      }
    }
    if (!merged) out.terms.push_back({v, lam / v2});
  }
  return out;
}

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// L_h u = A u + b on the interior unknowns of a grid.
struct LinearOperator {
  GridPtr grid;
  std::vector<int> unknown;        // node -> unknown or -1
  std::vector<std::size_t> nodes;  // unknown -> node
  SparseRowMatrix a;
  Eigen::VectorXd b;
  std::size_t fallback_nodes = 0;
  bool monotone = true;  // negative diagonal, nonnegative off-diagonal everywhere

  int unknowns() const { return static_cast<int>(nodes.size()); }

  Eigen::VectorXd gather(const ScalarField& f) const {
    Eigen::VectorXd v(unknowns());
    for (int k = 0; k < unknowns(); ++k) v(k) = f[nodes[k]];
    return v;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const { return a * u + b; }

  /// Copy of `base` with the unknown nodes replaced by `u`.
  ScalarField scatter(const Eigen::VectorXd& u, const ScalarField& base) const {
    std::vector<double> v = base.values();
    for (int k = 0; k < unknowns(); ++k) v[nodes[k]] = u(k);
    return ScalarField(base.grid_ptr(), std::move(v));
  }
};

struct AssemblyOptions {
  BoundaryMode mode = BoundaryMode::kShortleyWeller;
  int width = 1;
};

/// Monotone discretization of tr(W D^2 u) on the interior nodes of `grid`,
/// with boundary values `bc` closing the arms. `grid` may carry different
/// tags from the grid of `w` as long as the lattices agree.
inline LinearOperator assemble_operator(const TensorField& w, GridPtr grid, const BoundaryFn& bc,
                                        const AssemblyOptions& opt = {}) {
  if (!w.grid().same_lattice(*grid)) throw InvalidInput("operator grid and tensor field differ");
  if (opt.width < 1 || opt.width > 3) throw InvalidInput("stencil width must be 1, 2 or 3");
  LinearOperator op;
  op.grid = grid;
  op.unknown = number_interior(*grid, &op.nodes);
  const int n = op.unknowns();
  op.b = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 9);
  for (int k = 0; k < n; ++k) {
    const std::size_t idx = op.nodes[k];
    if (!w.valid(idx)) throw InvalidInput("coefficient field is undefined at an interior node");
    const StencilDecomposition dec = decompose_tensor(w.at(idx), grid->dim(), opt.width);
    if (dec.fallback) ++op.fallback_nodes;
    double diag = 0.0;
    for (const auto& t : dec.terms) {
      if (t.coeff == 0.0) continue;
      const SecondDifference d = second_difference(*grid, op.unknown, idx, t.dir, opt.mode, bc);
      diag += t.coeff * d.center;
      op.b(k) += t.coeff * d.constant();
      for (int s = 0; s < 2; ++s) {
        if (d.unknown[s] >= 0) trip.emplace_back(k, d.unknown[s], t.coeff * d.weight[s]);
      }
    }
    if (!(diag < 0.0)) op.monotone = false;
    trip.emplace_back(k, k, diag);
  }
  op.a.resize(n, n);
  op.a.setFromTriplets(trip.begin(), trip.end());
  op.a.makeCompressed();
  for (int r = 0; r < n; ++r) {
    for (SparseRowMatrix::InnerIterator it(op.a, r); it; ++it) {
      if (it.col() != r && it.value() < 0.0) op.monotone = false;
    }
  }
  return op;
}

}  // namespace lmo
