#pragma once

#include "lmo/core/error.hpp"
#include "lmo/linma/stencil.hpp"
#include "lmo/linma/tensor_field.hpp"

#include <algorithm>
#include <optional>
#include <string>

namespace lmo {

struct ComparisonResult {
  bool holds = true;
  std::optional<std::size_t> witness;  // node with the largest u - v when the comparison fails
  double max_excess = 0.0;             // max over nodes of u - v
};

/// Discrete comparison principle for the monotone L_h on the interior nodes
/// of u's grid, with each field supplying its own boundary-node values.
///
/// Preconditions (each violation raises PreconditionViolation naming it):
/// L_h u >= -tol_op (subsolution), L_h v <= tol_op (supersolution), and
/// u <= v + tol on the non-interior active nodes.
inline ComparisonResult check_comparison(const ScalarField& u, const ScalarField& v, const TensorField& w,
                                         double tol = 1e-10, double tol_op = 1e-8, int width = 1) {
  if (!u.grid().same_lattice(v.grid()) || !u.grid().same_lattice(w.grid())) {
    throw InvalidInput("comparison fields must share a lattice");
  }
  AssemblyOptions opt;
  opt.mode = BoundaryMode::kLattice;
  opt.width = width;
  const LinearOperator lu = assemble_operator(w, u.grid_ptr(), node_values(u), opt);
  const LinearOperator lv = assemble_operator(w, u.grid_ptr(), node_values(v), opt);
  const Eigen::VectorXd ru = lu.apply(lu.gather(u));
  const Eigen::VectorXd rv = lv.apply(lv.gather(v));
  for (Eigen::Index k = 0; k < ru.size(); ++k) {
    if (ru(k) < -tol_op) throw PreconditionViolation("u is not a discrete subsolution");
    if (rv(k) > tol_op) throw PreconditionViolation("v is not a discrete supersolution");
  }
  const Grid& g = u.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_active(i) && !g.is_interior(i) && u[i] > v[i] + tol) {
      throw PreconditionViolation("u exceeds v at a boundary node");
    }
  }
  ComparisonResult r;
  r.max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.is_active(i)) continue;
    const double e = u[i] - v[i];
    if (e > r.max_excess) {
      r.max_excess = e;
      if (e > tol) r.witness = i;
    }
  }
  r.holds = !(r.max_excess > tol);
  if (r.holds) r.witness.reset();
  return r;
}

}  // namespace lmo
