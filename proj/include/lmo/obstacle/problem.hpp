#pragma once

#include "lmo/core/error.hpp"
#include "lmo/geometry/extrapolate.hpp"
#include "lmo/geometry/grid.hpp"
#include "lmo/geometry/scalar_field.hpp"
#include "lmo/linma/stencil.hpp"
#include "lmo/linma/tensor_field.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace lmo {

/// Find u >= phi with L_w u <= 0, L_w u = 0 where u > phi, u = 0 on the
/// domain boundary. The grid of `phi` defines the unknowns (its interior
/// nodes) and must carry the domain; arms of the stencil are cut at the
/// boundary crossing where u = 0.
struct ObstacleProblem {
  TensorField w;
  ScalarField phi;

  const Grid& grid() const { return phi.grid(); }
  const GridPtr& grid_ptr() const { return phi.grid_ptr(); }

  /// Violations of "phi < 0 on the boundary" and "phi > 0 somewhere inside".
  /// These are warnings: oracle problems use such inputs on purpose.
  std::vector<std::string> guard_warnings() const {
    std::vector<std::string> out;
    const Grid& g = grid();
    bool positive_inside = false;
    bool boundary_ok = true;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.is_interior(i)) positive_inside = positive_inside || phi[i] > 0.0;
      else if (g.is_active(i) && !(phi[i] < 0.0)) boundary_ok = false;
    }
    if (g.domain()) {
      for (const Point& p : g.domain()->boundary_samples(256)) {
        const auto v = phi.bilinear(p);
        if (v && !(*v < 0.0)) boundary_ok = false;
      }
    }
    if (!boundary_ok) out.emplace_back("obstacle is not negative on the boundary");
    if (!positive_inside) out.emplace_back("obstacle is nowhere positive inside the domain");
    return out;
  }

  /// Contact threshold 1e-10 * max|phi| (a tiny floor keeps it positive).
  double tol_contact() const { return std::max(1e-10 * phi.max_abs(), 1e-300); }
};

struct ObstacleParams {
  double tol_lcp = 1e-8;
  double omega = 1.5;
  int max_sweeps = 2000000;      // projected SOR
  int max_outer = 500;           // active-set iterations
  int stencil_width = 1;
  int residual_every = 10;       // PSOR sweeps between residual checks
  double perron_change_tol = 1e-11;
  int perron_max_sweeps = 20000;
};

struct LCPSolution {
  ScalarField u;
  ScalarField phi;
  std::vector<std::uint8_t> contact;  // per node; 1 where u <= phi + tol_contact
  double residual = 0.0;              // max |min(-L_h u, u - phi)| over interior nodes
  int iterations = 0;
  std::string solver;
  double tol_contact = 0.0;
  std::vector<std::string> warnings;

  std::size_t contact_count() const {
    std::size_t c = 0;
    for (auto v : contact) c += v;
    return c;
  }
};

/// The discrete LCP of a problem: M = -A, q = -b so that -L_h u = M u + q.
struct DiscreteLcp {
  LinearOperator op;
  Eigen::VectorXd phi;
};

inline DiscreteLcp discretize(const ObstacleProblem& p, int width) {
  if (!p.w.grid().same_lattice(p.grid())) throw InvalidInput("coefficient field and obstacle lattices differ");
  if (!p.grid().domain()) throw InvalidInput("obstacle grid needs its domain");
  AssemblyOptions opt;
  opt.mode = BoundaryMode::kShortleyWeller;
  opt.width = width;
  DiscreteLcp d{assemble_operator(p.w, p.grid_ptr(), [](const Point&) { return 0.0; }, opt), {}};
  d.phi = d.op.gather(p.phi);
  return d;
}

/// max_k |min(-(A u + b)_k, u_k - phi_k)|.
inline double complementarity_residual(const LinearOperator& op, const Eigen::VectorXd& u, const Eigen::VectorXd& phi) {
  const Eigen::VectorXd lu = op.apply(u);
  double r = 0.0;
  for (Eigen::Index k = 0; k < u.size(); ++k) r = std::max(r, std::abs(std::min(-lu(k), u(k) - phi(k))));
  return r;
}

/// Builds the solution record: interior values from `u`, boundary band
/// filled by extrapolation through the zero boundary crossing.
inline LCPSolution make_solution(const ObstacleProblem& p, const DiscreteLcp& d, const Eigen::VectorXd& u,
                                 int iterations, std::string solver) {
  std::vector<double> vals(p.grid().size(), std::numeric_limits<double>::quiet_NaN());
  for (int k = 0; k < d.op.unknowns(); ++k) vals[d.op.nodes[k]] = u(k);
  LCPSolution s{extrapolate_band(ScalarField(p.grid_ptr(), std::move(vals)), 0.0), p.phi, {}, 0.0, iterations,
                std::move(solver), p.tol_contact(), p.guard_warnings()};
  s.contact.assign(p.grid().size(), 0);
  for (int k = 0; k < d.op.unknowns(); ++k) {
    if (u(k) <= d.phi(k) + s.tol_contact) s.contact[d.op.nodes[k]] = 1;
  }
  s.residual = complementarity_residual(d.op, u, d.phi);
  if (!d.op.monotone) s.warnings.emplace_back("NonMonotoneStencil: assembled operator is not an M-matrix");
  if (d.op.fallback_nodes > 0) {
    s.warnings.emplace_back("eigen-direction stencil used at " + std::to_string(d.op.fallback_nodes) + " nodes");
  }
  return s;
}

}  // namespace lmo
