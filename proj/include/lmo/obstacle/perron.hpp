#pragma once

#include "lmo/core/error.hpp"
#include "lmo/obstacle/problem.hpp"
#include "lmo/obstacle/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lmo {

struct PerronResult {
  ScalarField v;
  int sweeps = 0;
  std::size_t replacements = 0;
  double last_change = 0.0;
  std::vector<double> change_history;  // max |v_{k+1} - v_k| per sweep
};

namespace detail {

// Euclidean distance from every unknown to the nearest marked unknown, by
// two raster passes that propagate nearest-site indices over 8 neighbours.
inline std::vector<double> distance_to_marked(const Grid& g, const std::vector<std::size_t>& nodes,
                                              const std::vector<bool>& marked) {
  const std::size_t inf = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> site(g.size(), inf);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (marked[k]) site[nodes[k]] = nodes[k];
  }
  auto d2 = [&](std::size_t a, std::size_t s) { return (g.point(a) - g.point(s)).squaredNorm(); };
  auto relax = [&](std::size_t idx, int di, int dj) {
    const int i = g.ix(idx) + di;
    const int j = g.iy(idx) + dj;
    if (!g.in_range(i, j)) return;
    const std::size_t s = site[g.index(i, j)];
    if (s == inf) return;
    if (site[idx] == inf || d2(idx, s) < d2(idx, site[idx])) site[idx] = s;
  };
  const int jr = g.dim() == 1 ? 0 : 1;
  for (int rep = 0; rep < 2; ++rep) {
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
      relax(idx, -1, 0);
      for (int di = -1; di <= 1 && jr; ++di) relax(idx, di, -1);
    }
    for (std::size_t idx = g.size(); idx-- > 0;) {
      relax(idx, 1, 0);
      for (int di = -1; di <= 1 && jr; ++di) relax(idx, di, 1);
    }
  }
  std::vector<double> out(nodes.size(), std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (site[nodes[k]] != inf) out[k] = std::sqrt(d2(nodes[k], site[nodes[k]]));
  }
  return out;
}

}  // namespace detail

/// Perron dropping: starting from a discrete supersolution v0, repeatedly
/// replace v on balls inside {v > phi} by the solution of the local
/// obstacle problem with boundary values v (the L_w-harmonic replacement
/// clamped at phi), taking the pointwise minimum with the old values.
///
/// Centers are visited lexicographically; a ball of radius
/// r = min(dist to contact set, dist to boundary)/2 is used unless an
/// earlier center of the same sweep lies within r/2. Iterates never
/// increase. The sweep loop stops once the largest change falls below
/// `perron_change_tol`.
inline PerronResult perron_dropping(const ObstacleProblem& p, const ScalarField& v0, const ObstacleParams& params = {},
                                    double tol_op = 1e-8) {
  if (!v0.grid().same_lattice(p.grid())) throw InvalidInput("initial guess lives on a different lattice");
  const DiscreteLcp d = discretize(p, params.stencil_width);
  const Grid& g = p.grid();
  const int n = d.op.unknowns();
  const double tol_contact = p.tol_contact();
  Eigen::VectorXd v = d.op.gather(v0);
  if (!v.allFinite()) throw InvalidInitialGuess("initial guess is not finite at interior nodes");
  {
    const Eigen::VectorXd lv = d.op.apply(v);
    for (int k = 0; k < n; ++k) {
      if (v(k) < d.phi(k) - tol_contact) throw InvalidInitialGuess("initial guess dips below the obstacle");
      if (lv(k) > tol_op) throw InvalidInitialGuess("initial guess is not a discrete supersolution");
    }
  }

  std::vector<double> boundary_dist(n);
  for (int k = 0; k < n; ++k) boundary_dist[k] = -g.domain()->signed_distance(g.point(d.op.nodes[k]));

  PerronResult out{v0};
  const double h = g.spacing();
  for (int sweep = 0; sweep < params.perron_max_sweeps; ++sweep) {
    std::vector<bool> contact(n);
    for (int k = 0; k < n; ++k) contact[k] = v(k) <= d.phi(k) + tol_contact;
    const auto contact_dist = detail::distance_to_marked(g, d.op.nodes, contact);
    double change = 0.0;
    std::vector<Point> centers;
    for (int k = 0; k < n; ++k) {
      if (contact[k]) continue;
      const double r = 0.5 * std::min(contact_dist[k], boundary_dist[k]);
      const Point x = g.point(d.op.nodes[k]);
      bool covered = false;
      for (std::size_t c = 0; c < centers.size() && !covered; ++c) covered = (centers[c] - x).norm() < 0.5 * r;
      if (covered) continue;
      centers.push_back(x);

      // Ball unknowns (row-major), always containing the center.
      std::vector<int> ball;
      const int reach = static_cast<int>(std::floor(r / h));
      const int ci = g.ix(d.op.nodes[k]);
      const int cj = g.iy(d.op.nodes[k]);
      const int jr = g.dim() == 1 ? 0 : reach;
      for (int dj = -jr; dj <= jr; ++dj) {
        for (int di = -reach; di <= reach; ++di) {
          if (!g.in_range(ci + di, cj + dj)) continue;
          const int q = d.op.unknown[g.index(ci + di, cj + dj)];
          if (q < 0) continue;
          if (q != k && (g.point(d.op.nodes[q]) - x).norm() > r) continue;
          ball.push_back(q);
        }
      }
      ++out.replacements;
      if (ball.size() == 1) {
        double acc = d.op.b(k);
        double diag = 0.0;
        for (SparseRowMatrix::InnerIterator it(d.op.a, k); it; ++it) {
          if (it.col() == k) diag = it.value();
          else acc += it.value() * v(it.col());
        }
        const double nv = std::min(v(k), std::max(d.phi(k), -acc / diag));
        change = std::max(change, v(k) - nv);
        v(k) = nv;
        continue;
      }
      std::vector<int> local(n, -1);
      for (std::size_t q = 0; q < ball.size(); ++q) local[ball[q]] = static_cast<int>(q);
      const int m = static_cast<int>(ball.size());
      std::vector<Eigen::Triplet<double>> t;
      Eigen::VectorXd lb(m), lphi(m), lv(m);
      for (int q = 0; q < m; ++q) {
        const int row = ball[q];
        double acc = d.op.b(row);
        for (SparseRowMatrix::InnerIterator it(d.op.a, row); it; ++it) {
          const int col = static_cast<int>(it.col());
          if (local[col] >= 0) t.emplace_back(q, local[col], it.value());
          else acc += it.value() * v(col);
        }
        lb(q) = acc;
        lphi(q) = d.phi(row);
        lv(q) = v(row);
      }
      SparseRowMatrix la(m, m);
      la.setFromTriplets(t.begin(), t.end());
      la.makeCompressed();
      Eigen::VectorXd sol = lphi.cwiseMax(0.0);
      active_set_lcp(la, lb, lphi, sol, params.max_outer);
      for (int q = 0; q < m; ++q) {
        const double nv = std::min(lv(q), std::max(sol(q), lphi(q)));
        change = std::max(change, lv(q) - nv);
        v(ball[q]) = nv;
      }
    }
    out.sweeps = sweep + 1;
    out.last_change = change;
    out.change_history.push_back(change);
    if (change <= params.perron_change_tol) break;
  }
  std::vector<double> vals(g.size(), std::numeric_limits<double>::quiet_NaN());
  for (int k = 0; k < n; ++k) vals[d.op.nodes[k]] = v(k);
  out.v = extrapolate_band(ScalarField(p.grid_ptr(), std::move(vals)), 0.0);
  return out;
}

/// min(M, K sqrt(dist to boundary)) with K, M chosen so that v0 >= phi:
/// concave, hence a discrete supersolution of every monotone stencil.
inline ScalarField concave_supersolution(const ObstacleProblem& p) {
  const Grid& g = p.grid();
  const ConvexDomain& d = *g.domain();
  double m = 0.0, k = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.is_interior(i) || !(p.phi[i] > 0.0)) continue;
    m = std::max(m, p.phi[i]);
    k = std::max(k, p.phi[i] / std::sqrt(std::max(-d.signed_distance(g.point(i)), 1e-300)));
  }
  return ScalarField::from_function(p.grid_ptr(), [&](const Point& x) {
    return std::min(m, k * std::sqrt(std::max(-d.signed_distance(x), 0.0)));
  });
}

}  // namespace lmo
