#pragma once

#include "lmo/core/bounds.hpp"
#include "lmo/core/error.hpp"
#include "lmo/core/linalg.hpp"
#include "lmo/geometry/domain.hpp"
#include "lmo/geometry/extrapolate.hpp"
#include "lmo/geometry/grid.hpp"
#include "lmo/geometry/scalar_field.hpp"
#include "lmo/linma/stencil.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace lmo {

/// det D^2 w = f in the domain, w = 0 on its boundary.
struct MAProblem {
  ConvexDomain domain;
  ScalarField f;
  EllipticityBounds bounds;

  /// Throws InvalidInput unless lambda <= f <= Lambda at every interior node.
  void validate() const {
    const Grid& g = f.grid();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g.is_interior(i)) continue;
      const double v = f[i];
      if (!(v >= bounds.lambda * (1 - 1e-12)) || !(v <= bounds.Lambda * (1 + 1e-12))) {
        throw InvalidInput("density leaves [lambda, Lambda] at an interior node");
      }
    }
  }
};

struct MASolverParams {
  double tol_ma = 1e-8;
  double tol_convex = 1e-10;
  int max_newton = 200;
  int stencil_width = 1;
  int pseudo_time_steps = 2000;  // explicit steps per fallback episode
  int max_fallback_episodes = 20;
};

struct MASolution {
  ScalarField w;
  int newton_iterations = 0;
  int pseudo_time_steps = 0;
  double max_residual = 0.0;
  double mean_residual = 0.0;
  double convexity_margin = 0.0;
};

namespace detail {

// The four directional differences that make up the discrete Hessian at one
// unknown: (1,0), (0,1), (1,1), (1,-1); only the first in one dimension.
struct HessianStencil {
  std::array<SecondDifference, 4> d;
  int count = 1;
};

struct MAStencils {
  std::vector<HessianStencil> at;
};

inline MAStencils ma_stencils(const Grid& g, const std::vector<int>& unknown, const std::vector<std::size_t>& nodes) {
  MAStencils s;
  s.at.resize(nodes.size());
  const BoundaryFn zero = [](const Point&) { return 0.0; };
  const std::array<Offset, 4> dirs{Offset{1, 0}, Offset{0, 1}, Offset{1, 1}, Offset{1, -1}};
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    s.at[k].count = g.dim() == 1 ? 1 : 4;
    for (int q = 0; q < s.at[k].count; ++q) {
      s.at[k].d[q] = second_difference(g, unknown, nodes[k], dirs[q], BoundaryMode::kShortleyWeller, zero);
    }
  }
  return s;
}

// Discrete Hessian entries (a, b, c) = (w_xx, w_yy, w_xy) at unknown k.
inline std::array<double, 3> hessian_entries(const HessianStencil& hs, double uc, const Eigen::VectorXd& u) {
  const double a = hs.d[0].apply(uc, u);
  if (hs.count == 1) return {a, 0.0, 0.0};
  const double b = hs.d[1].apply(uc, u);
  const double c = 0.25 * (hs.d[2].apply(uc, u) - hs.d[3].apply(uc, u));
  return {a, b, c};
}

// det of [[a,c],[c,b]] with eigenvalues clamped below at -tol, and its
// partial derivatives with respect to (a, b, c).
inline std::array<double, 4> clamped_det(double a, double b, double c, double tol, int dim) {
  if (dim == 1) return {a, 1.0, 0.0, 0.0};
  const double mean = 0.5 * (a + b);
  const double rad = std::sqrt(0.25 * (a - b) * (a - b) + c * c);
  const double lp = mean + rad;
  const double lm = mean - rad;
  if (lm >= -tol) return {a * b - c * c, b, a, -2.0 * c};
  const double lmc = -tol;
  const double lpc = std::max(lp, -tol);
  // d lambda = q q^T : dH with q the unit eigenvector.
  auto grad = [&](double lam) -> std::array<double, 3> {
    Eigen::Vector2d q;
    if (std::abs(c) > 1e-300) q = Eigen::Vector2d(c, lam - a).normalized();
    else q = (std::abs(lam - a) <= std::abs(lam - b)) ? Eigen::Vector2d(1, 0) : Eigen::Vector2d(0, 1);
    return {q.x() * q.x(), q.y() * q.y(), 2 * q.x() * q.y()};
  };
  std::array<double, 4> out{lpc * lmc, 0.0, 0.0, 0.0};
  if (lp > -tol) {
    const auto gp = grad(lp);
    for (int i = 0; i < 3; ++i) out[1 + i] += lmc * gp[i];
  }
  return out;
}

}  // namespace detail

/// Smallest directional second difference (divided by |v|^2) over interior
/// nodes and primitive lattice directions of the given width, with arms cut
/// at the domain boundary where w = 0.
inline double convexity_margin(const ScalarField& w, int width) {
  const Grid& g = w.grid();
  std::vector<std::size_t> nodes;
  const auto unknown = number_interior(g, &nodes);
  Eigen::VectorXd u(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t k = 0; k < nodes.size(); ++k) u(k) = w[nodes[k]];
  const BoundaryFn zero = [](const Point&) { return 0.0; };
  std::vector<Offset> dirs;
  for (int dy = 0; dy <= (g.dim() == 1 ? 0 : width); ++dy) {
    for (int dx = -width; dx <= width; ++dx) {
      if ((dy == 0 && dx <= 0) || std::gcd(std::abs(dx), dy) != 1) continue;
      dirs.push_back({dx, dy});
    }
  }
  const BoundaryMode mode = g.domain() ? BoundaryMode::kShortleyWeller : BoundaryMode::kLattice;
  const BoundaryFn bc = g.domain() ? zero : node_values(w);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    for (Offset o : dirs) {
      const auto d = second_difference(g, unknown, nodes[k], o, mode, bc);
      margin = std::min(margin, d.apply(u(k), u) / o.vec().squaredNorm());
    }
  }
  return margin;
}

/// Damped Newton for the wide-stencil discretization of det D^2 w = f with
/// w = 0 at boundary crossings. The Hessian uses the four directions (1,0),
/// (0,1), (1,1), (1,-1), arms cut at the boundary, and is exact on
/// quadratics. The start is the Poisson solve Laplace(w) = n f^{1/n}; when a
/// line search fails, explicit pseudo-time steps w += dt (det - f) take over
/// before Newton resumes.
inline MASolution solve_ma(const MAProblem& p, const GridPtr& grid, const MASolverParams& params = {}) {
  if (!grid->domain()) throw InvalidInput("solve_ma needs a grid built over the problem domain");
  if (!p.f.grid().same_lattice(*grid)) throw InvalidInput("density and grid lattices differ");
  p.validate();
  const int dim = grid->dim();
  std::vector<std::size_t> nodes;
  const auto unknown = number_interior(*grid, &nodes);
  const int n = static_cast<int>(nodes.size());
  if (n == 0) throw InvalidInput("grid has no interior nodes");
  const auto st = detail::ma_stencils(*grid, unknown, nodes);
  Eigen::VectorXd f(n);
  for (int k = 0; k < n; ++k) f(k) = p.f[nodes[k]];

  auto residual = [&](const Eigen::VectorXd& u, Eigen::VectorXd& r) {
    r.resize(n);
    for (int k = 0; k < n; ++k) {
      const auto h = detail::hessian_entries(st.at[k], u(k), u);
      r(k) = detail::clamped_det(h[0], h[1], h[2], params.tol_convex, dim)[0] - f(k);
    }
    return r.cwiseAbs().maxCoeff();
  };

  using ColMatrix = Eigen::SparseMatrix<double>;
  auto add_row = [](std::vector<Eigen::Triplet<double>>& t, int k, const SecondDifference& d, double s) {
    t.emplace_back(k, k, s * d.center);
    for (int q = 0; q < 2; ++q) {
      if (d.unknown[q] >= 0) t.emplace_back(k, d.unknown[q], s * d.weight[q]);
    }
  };

  // Initial guess: Laplace(w) = n f^{1/n}.
  Eigen::VectorXd u(n);
  {
    std::vector<Eigen::Triplet<double>> t;
    Eigen::VectorXd rhs(n);
    for (int k = 0; k < n; ++k) {
      double c = 0.0;
      add_row(t, k, st.at[k].d[0], 1.0);
      c += st.at[k].d[0].constant();
      if (dim == 2) {
        add_row(t, k, st.at[k].d[1], 1.0);
        c += st.at[k].d[1].constant();
      }
      rhs(k) = dim * std::pow(f(k), 1.0 / dim) - c;
    }
    ColMatrix lap(n, n);
    lap.setFromTriplets(t.begin(), t.end());
    Eigen::SparseLU<ColMatrix> lu;
    lu.compute(lap);
    if (lu.info() != Eigen::Success) throw NoConvergence("Poisson start failed to factor", 0.0, 0);
    u = lu.solve(rhs);
  }

  MASolution out{ScalarField(grid, std::vector<double>(grid->size(), 0.0))};
  Eigen::VectorXd r;
  double res = residual(u, r);
  Eigen::SparseLU<ColMatrix> lu;
  bool analyzed = false;
  int fallback_episodes = 0;
  int it = 0;
  while (res > params.tol_ma) {
    if (it >= params.max_newton) throw NoConvergence("Monge-Ampere Newton iteration", res, it);
    ++it;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(n) * 9);
    for (int k = 0; k < n; ++k) {
      const auto h = detail::hessian_entries(st.at[k], u(k), u);
      const auto dd = detail::clamped_det(h[0], h[1], h[2], params.tol_convex, dim);
      add_row(t, k, st.at[k].d[0], dd[1]);
      if (dim == 2) {
        add_row(t, k, st.at[k].d[1], dd[2]);
        add_row(t, k, st.at[k].d[2], 0.25 * dd[3]);
        add_row(t, k, st.at[k].d[3], -0.25 * dd[3]);
      }
    }
    ColMatrix jac(n, n);
    jac.setFromTriplets(t.begin(), t.end());
    jac.makeCompressed();
    if (!analyzed) {
      lu.analyzePattern(jac);
      analyzed = true;
    }
    lu.factorize(jac);
    bool accepted = false;
    if (lu.info() == Eigen::Success) {
      const Eigen::VectorXd step = lu.solve(-r);
      double alpha = 1.0;
      Eigen::VectorXd trial_r;
      for (int ls = 0; ls < 30 && step.allFinite(); ++ls, alpha *= 0.5) {
        const Eigen::VectorXd trial = u + alpha * step;
        const double tr = residual(trial, trial_r);
        if (tr < (1.0 - 1e-4 * alpha) * res) {
          u = trial;
          r = trial_r;
          res = tr;
          accepted = true;
          break;
        }
      }
    }
    if (accepted) continue;
    if (++fallback_episodes > params.max_fallback_episodes) {
      throw NoConvergence("Monge-Ampere pseudo-time fallback", res, it);
    }
    // Explicit step bounded by the largest diagonal of the linearization.
    double diag = 0.0;
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int q = 0; q < st.at[k].count; ++q) s += std::abs(st.at[k].d[q].center);
      diag = std::max(diag, s);
    }
    double trace = 1.0;
    for (int k = 0; k < n; ++k) {
      const auto h = detail::hessian_entries(st.at[k], u(k), u);
      trace = std::max(trace, std::abs(h[0]) + std::abs(h[1]));
    }
    const double dt = 0.5 / (diag * trace);
    for (int s = 0; s < params.pseudo_time_steps; ++s) {
      residual(u, r);
      u += dt * r;
      ++out.pseudo_time_steps;
    }
    res = residual(u, r);
  }

  std::vector<double> vals(grid->size(), std::numeric_limits<double>::quiet_NaN());
  for (int k = 0; k < n; ++k) vals[nodes[k]] = u(k);
  out.w = extrapolate_band(ScalarField(grid, std::move(vals)), 0.0);
  out.newton_iterations = it;
  out.max_residual = res;
  out.mean_residual = n > 0 ? r.cwiseAbs().mean() : 0.0;
  out.convexity_margin = convexity_margin(out.w, params.stencil_width);
  return out;
}

struct MAResidualStats {
  double max_residual = 0.0;
  double mean_residual = 0.0;
  double convexity_margin = 0.0;
  std::size_t nodes = 0;
};

/// |det_h D^2 w - f| over interior nodes from lattice second differences
/// (mixed term by the 4-point cross), plus the minimum lattice second
/// difference along (1,0), (0,1), (1,1), (1,-1) divided by |v|^2.
inline MAResidualStats verify_ma_residual(const ScalarField& w, const ScalarField& f) {
  if (!w.grid().same_lattice(f.grid())) throw InvalidInput("verify_ma_residual needs a shared grid");
  const Grid& g = w.grid();
  MAResidualStats s;
  s.convexity_margin = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (!g.is_interior(idx)) continue;
    const auto h = w.node_hessian(idx);
    if (!h) continue;
    const double d = det_dim(*h, g.dim());
    const double e = std::abs(d - f[idx]);
    s.max_residual = std::max(s.max_residual, e);
    sum += e;
    ++s.nodes;
    const Mat2& m = *h;
    s.convexity_margin = std::min(s.convexity_margin, m(0, 0));
    if (g.dim() == 2) {
      s.convexity_margin = std::min({s.convexity_margin, m(1, 1), 0.5 * (m(0, 0) + m(1, 1)) + m(0, 1),
                                     0.5 * (m(0, 0) + m(1, 1)) - m(0, 1)});
    }
  }
  s.mean_residual = s.nodes ? sum / static_cast<double>(s.nodes) : 0.0;
  return s;
}

}  // namespace lmo
