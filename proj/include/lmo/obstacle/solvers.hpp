#pragma once

#include "lmo/core/error.hpp"
#include "lmo/obstacle/problem.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace lmo {

/// Projected SOR for: find u >= phi with -(A u + b) >= 0 and
/// (u - phi) . (A u + b) = 0, A an M-matrix with negative diagonal.
/// Lexicographic sweeps over the unknowns. Returns the sweep count.
inline int psor_lcp(const SparseRowMatrix& a, const Eigen::VectorXd& b, const Eigen::VectorXd& phi,
                    Eigen::VectorXd& u, double omega, double tol, int max_sweeps, int check_every,
                    const std::function<double(const Eigen::VectorXd&)>& residual) {
  if (!(omega > 0.0 && omega < 2.0)) throw InvalidInput("relaxation factor must lie in (0, 2)");
  const Eigen::Index n = u.size();
  Eigen::VectorXd diag(n);
  for (Eigen::Index r = 0; r < n; ++r) diag(r) = a.coeff(r, r);
  double res = residual(u);
  int sweep = 0;
  while (res > tol) {
    if (sweep >= max_sweeps) throw NoConvergence("projected SOR", res, sweep);
    for (int s = 0; s < check_every; ++s, ++sweep) {
      for (Eigen::Index r = 0; r < n; ++r) {
        double acc = b(r);
        for (SparseRowMatrix::InnerIterator it(a, r); it; ++it) {
          if (it.col() != r) acc += it.value() * u(it.col());
        }
        const double gs = -acc / diag(r);
        u(r) = std::max(phi(r), (1.0 - omega) * u(r) + omega * gs);
      }
    }
    res = residual(u);
  }
  return sweep;
}

/// Primal-dual active set iteration for the same LCP. The active set is
/// {k : lambda_k + c_k (phi_k - u_k) > 0} with lambda = -(A u + b) and c_k
/// the diagonal magnitude; each step solves the equality-constrained
/// system exactly. Stops when the active set repeats the previous one;
/// a return to an older set is reported as cycling.
inline int active_set_lcp(const SparseRowMatrix& a, const Eigen::VectorXd& b, const Eigen::VectorXd& phi,
                          Eigen::VectorXd& u, int max_outer, const std::vector<std::uint8_t>* seed = nullptr) {
  const Eigen::Index n = u.size();
  using ColMatrix = Eigen::SparseMatrix<double>;
  std::vector<std::uint8_t> active = seed ? *seed : std::vector<std::uint8_t>(n, 0);
  std::vector<std::uint8_t> previous;
  std::set<std::vector<std::uint8_t>> seen;
  Eigen::VectorXd diag(n);
  for (Eigen::Index r = 0; r < n; ++r) diag(r) = -a.coeff(r, r);
  int it = 0;
  while (true) {
    if (it >= max_outer) throw NoConvergence("active-set iteration", -1.0, it);
    ++it;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(a.nonZeros());
    Eigen::VectorXd rhs(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      if (active[r]) {
        t.emplace_back(r, r, 1.0);
        rhs(r) = phi(r);
        continue;
      }
      for (SparseRowMatrix::InnerIterator iter(a, r); iter; ++iter) t.emplace_back(r, iter.col(), iter.value());
      rhs(r) = -b(r);
    }
    ColMatrix m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    Eigen::SparseLU<ColMatrix> lu;
    lu.compute(m);
    if (lu.info() != Eigen::Success) throw NoConvergence("active-set linear solve failed to factor", -1.0, it);
    u = lu.solve(rhs);
    const Eigen::VectorXd lambda = -(a * u + b);
    previous = active;
    for (Eigen::Index r = 0; r < n; ++r) {
      const double lam = previous[r] ? lambda(r) : 0.0;
      active[r] = lam + diag(r) * (phi(r) - u(r)) > 0.0 ? 1 : 0;
    }
    if (active == previous) break;
    if (!seen.insert(previous).second) throw NoConvergence("active-set iteration is cycling", -1.0, it);
  }
  return it;
}

namespace detail {

inline Eigen::VectorXd obstacle_start(const DiscreteLcp& d) { return d.phi.cwiseMax(0.0); }

}  // namespace detail

/// Projected SOR on the monotone discretization (lexicographic order,
/// relaxation `omega`, default 1.5).
inline LCPSolution solve_obstacle_psor(const ObstacleProblem& p, const ObstacleParams& params = {},
                                       const Eigen::VectorXd* start = nullptr) {
  const DiscreteLcp d = discretize(p, params.stencil_width);
  Eigen::VectorXd u = start ? start->cwiseMax(d.phi) : detail::obstacle_start(d);
  const int sweeps = psor_lcp(d.op.a, d.op.b, d.phi, u, params.omega, params.tol_lcp, params.max_sweeps,
                              params.residual_every,
                              [&](const Eigen::VectorXd& v) { return complementarity_residual(d.op, v, d.phi); });
  return make_solution(p, d, u, sweeps, "psor");
}

/// Lattice with twice the spacing sharing the origin and every other node.
inline GridPtr coarsen(const Grid& g) {
  const int nx = (g.nx() + 1) / 2;
  const int ny = g.dim() == 1 ? 1 : (g.ny() + 1) / 2;
  const double h = 2 * g.spacing();
  std::vector<NodeTag> tags(static_cast<std::size_t>(nx) * ny, NodeTag::kExterior);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Point x = g.point(2 * i, 2 * j);
      if (g.domain()->signed_distance(x) < -Grid::interior_margin() * h) tags[j * nx + i] = NodeTag::kInterior;
    }
  }
  Grid::mark_band(tags, nx, ny, g.dim());
  return std::make_shared<const Grid>(g.origin(), h, nx, ny, g.dim(), std::move(tags), g.domain_ptr());
}

namespace detail {

// Same problem sampled on the coarsened lattice.
inline ObstacleProblem restrict_problem(const ObstacleProblem& p) {
  const GridPtr c = coarsen(p.grid());
  const Grid& f = p.grid();
  TensorField w(c);
  std::vector<double> phi(c->size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t idx = 0; idx < c->size(); ++idx) {
    if (!c->is_active(idx)) continue;
    const std::size_t fi = f.index(2 * c->ix(idx), 2 * c->iy(idx));
    phi[idx] = p.phi[fi];
    if (p.w.valid(fi)) w.set(idx, p.w.at(fi));
  }
  return ObstacleProblem{std::move(w), ScalarField(c, std::move(phi))};
}

}  // namespace detail

/// Primal-dual active set on the monotone discretization. Large 2D problems
/// are seeded with the contact set of the same problem on a coarsened
/// lattice (applied recursively), which keeps the outer iteration count
/// nearly independent of the grid.
inline LCPSolution solve_obstacle_activeset(const ObstacleProblem& p, const ObstacleParams& params = {}) {
  const DiscreteLcp d = discretize(p, params.stencil_width);
  Eigen::VectorXd u = detail::obstacle_start(d);
  std::vector<std::uint8_t> seed;
  if (p.grid().dim() == 2 && d.op.unknowns() > 4000) {
    const ObstacleProblem coarse = detail::restrict_problem(p);
    const LCPSolution cs = solve_obstacle_activeset(coarse, params);
    seed.assign(d.op.unknowns(), 0);
    for (int k = 0; k < d.op.unknowns(); ++k) {
      const auto uc = cs.u.bilinear(p.grid().point(d.op.nodes[k]));
      if (uc && *uc <= d.phi(k)) seed[k] = 1;
    }
  }
  const int it = active_set_lcp(d.op.a, d.op.b, d.phi, u, params.max_outer, seed.empty() ? nullptr : &seed);
  LCPSolution s = make_solution(p, d, u, it, "activeset");
  if (s.residual > params.tol_lcp) throw NoConvergence("active-set residual above tolerance", s.residual, it);
  return s;
}

}  // namespace lmo
