#pragma once

#include "lmo/geometry/grid.hpp"
#include "lmo/geometry/scalar_field.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace lmo {

/// Fills non-interior active nodes of a field that is defined on interior
/// nodes, by quadratic extrapolation along a lattice line through the
/// boundary crossing (value `g0`) and two interior nodes. Exact when the
/// field restricted to that line is quadratic.
inline ScalarField extrapolate_band(const ScalarField& interior_values, double g0 = 0.0) {
  const Grid& g = interior_values.grid();
  std::vector<double> v = interior_values.values();
  const auto offsets = g.unit_offsets();
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (!g.is_active(idx) || g.is_interior(idx)) continue;
    double best = std::numeric_limits<double>::quiet_NaN();
    int best_rank = 99;
    for (std::size_t oi = 0; oi < offsets.size(); ++oi) {
      const Offset o = offsets[oi];
      const auto n1 = g.neighbor(idx, o);
      if (!n1 || !g.is_interior(*n1)) continue;
      const auto n2 = g.neighbor(*n1, o);
      const bool two = n2 && g.is_interior(*n2);
      const int rank = static_cast<int>(oi) + (two ? 0 : 10);
      if (rank >= best_rank) continue;
      const double step = o.norm() * g.spacing();
      const Point e = o.vec() / o.norm();
      double s0 = 0.0;
      if (g.domain()) s0 = step - g.domain()->exit_distance(g.point(*n1), -e);
      const double s1 = step;
      const double u1 = interior_values[*n1];
      if (two) {
        const double s2 = 2 * step;
        const double u2 = interior_values[*n2];
        const double l0 = (0 - s1) * (0 - s2) / ((s0 - s1) * (s0 - s2));
        const double l1 = (0 - s0) * (0 - s2) / ((s1 - s0) * (s1 - s2));
        const double l2 = (0 - s0) * (0 - s1) / ((s2 - s0) * (s2 - s1));
        best = l0 * g0 + l1 * u1 + l2 * u2;
      } else {
        best = g0 + (u1 - g0) * (0 - s0) / (s1 - s0);
      }
      best_rank = rank;
    }
    v[idx] = std::isfinite(best) ? best : g0;
  }
  return ScalarField(interior_values.grid_ptr(), std::move(v));
}

}  // namespace lmo
