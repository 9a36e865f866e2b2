#pragma once

#include "lmo/core/error.hpp"
#include "lmo/geometry/scalar_field.hpp"
#include "lmo/sections/section.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lmo {

/// kappa = sup_{S_h} |phi - l|, s = sup_{S_{h/2}} |u - l| with l the tangent
/// plane of phi at x0. When kappa < 1e-14 the ratio is not formed.
struct GrowthReport {
  double h = 0.0;
  double kappa = 0.0;
  double s = 0.0;
  double ratio = 0.0;
  bool exact_contact = false;
  double min_u_minus_l = 0.0;  // over S_h; the lower bound asks for >= -kappa
  bool lower_bound_holds = true;
};

struct GrowthSummary {
  std::vector<GrowthReport> reports;
  double c_empirical = 0.0;  // max ratio
  double ratio_spread = 1.0; // max ratio / min ratio over heights with kappa > 0
};

inline GrowthSummary growth_check(const ScalarField& u, const ScalarField& phi, const ScalarField& w, const Point& x0,
                                  const std::vector<double>& heights, double tol_contact = 1e-10) {
  if (!w.grid().same_lattice(u.grid()) || !w.grid().same_lattice(phi.grid())) {
    throw InvalidInput("w, u and phi must share a lattice");
  }
  if (heights.empty()) throw InvalidInput("growth check needs at least one height");
  const auto jet = phi.taylor(x0);
  if (!jet) throw InvalidInput("obstacle lacks a complete stencil at x0");
  const Point c = w.grid().dim() == 1 ? Point(x0.x(), 0.0) : x0;
  const Point grad = w.grid().dim() == 1 ? Point(jet->gradient.x(), 0.0) : jet->gradient;
  const auto ell = [&](const Point& p) { return jet->value + grad.dot(p - c); };
  const Grid& g = w.grid();

  GrowthSummary out;
  double rmin = std::numeric_limits<double>::infinity();
  for (double h : heights) {
    const Section big = extract_section(w, x0, h);
    const Section half = extract_section(w, x0, 0.5 * h);
    GrowthReport r;
    r.h = h;
    r.min_u_minus_l = std::numeric_limits<double>::infinity();
    for (std::size_t idx : big.nodes) {
      const double l = ell(g.point(idx));
      r.kappa = std::max(r.kappa, std::abs(phi[idx] - l));
      r.min_u_minus_l = std::min(r.min_u_minus_l, u[idx] - l);
    }
    for (std::size_t idx : half.nodes) r.s = std::max(r.s, std::abs(u[idx] - ell(g.point(idx))));
    r.lower_bound_holds = r.min_u_minus_l >= -r.kappa - tol_contact;
    if (r.kappa < 1e-14) {
      r.exact_contact = true;
    } else {
      r.ratio = r.s / r.kappa;
      out.c_empirical = std::max(out.c_empirical, r.ratio);
      rmin = std::min(rmin, r.ratio);
    }
    out.reports.push_back(r);
  }
  if (std::isfinite(rmin) && rmin > 0.0) out.ratio_spread = out.c_empirical / rmin;
  return out;
}

}  // namespace lmo
