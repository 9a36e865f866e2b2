#pragma once

#include "lmo/core/error.hpp"
#include "lmo/geometry/contour.hpp"
#include "lmo/obstacle/problem.hpp"

#include <limits>
#include <vector>

namespace lmo {

/// Sub-grid points on the interface between {u > phi} and the contact set.
struct FreeBoundary {
  std::vector<Polyline> curves;  // 2D: marching-squares polylines
  std::vector<Point> points;     // all vertices in curve order (1D: the crossings)
};

/// u - phi as a field, NaN off the active nodes.
inline ScalarField gap_field(const LCPSolution& sol) {
  std::vector<double> v(sol.u.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (sol.u.grid().is_active(i)) v[i] = sol.u[i] - sol.phi[i];
  }
  return ScalarField(sol.u.grid_ptr(), std::move(v));
}

/// Level set {u - phi = tol_contact} by marching squares (sign changes in
/// 1D) with linear interpolation along cell edges.
inline FreeBoundary free_boundary(const LCPSolution& sol) {
  if (sol.contact_count() == 0) throw EmptyFreeBoundary("contact set is empty");
  const ScalarField gap = gap_field(sol);
  FreeBoundary fb;
  if (gap.grid().dim() == 1) {
    fb.points = level_crossings_1d(gap, sol.tol_contact, EdgeRoot::kLinear);
  } else {
    fb.curves = contour_lines(gap, sol.tol_contact, EdgeRoot::kLinear);
    for (const auto& c : fb.curves) fb.points.insert(fb.points.end(), c.points.begin(), c.points.end());
  }
  if (fb.points.empty()) throw EmptyFreeBoundary("no sign change of u - phi inside the grid");
  return fb;
}

}  // namespace lmo
