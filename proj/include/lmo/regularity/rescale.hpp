#pragma once

#include "lmo/core/error.hpp"
#include "lmo/core/linalg.hpp"
#include "lmo/geometry/affine.hpp"
#include "lmo/geometry/domain.hpp"
#include "lmo/geometry/ellipsoid.hpp"
#include "lmo/geometry/grid.hpp"
#include "lmo/geometry/resample.hpp"
#include "lmo/geometry/scalar_field.hpp"
#include "lmo/sections/section.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lmo {

/// The picture around x0 normalized by its section:
///   w*(y) = K (w(T^{-1} y) - l(T^{-1} y) - h),  u*(y) = u(T^{-1} y),  phi*(y) = phi(T^{-1} y)
/// on T S_h(x0), with l the tangent plane of w at x0.
struct RescaledProblem {
  AffineMap t;
  double k = 1.0;
  ScalarField w_star;
  ScalarField u_star;
  ScalarField phi_star;
  Point y0;
  double det_center = 0.0;          // det_h D^2 w(x0)
  double min_gap = 0.0;             // min over active nodes of u* - phi*
  double det_ratio_deviation = 0.0; // max |det_h D^2 w*(y) - det_h D^2 w(T^{-1}y) / det_h D^2 w(x0)|
  std::size_t det_nodes = 0;        // interior nodes entering det_ratio_deviation
};

namespace detail {

inline std::vector<Point> cap_vertices(const std::vector<Point>& poly, std::size_t cap) {
  if (poly.size() <= cap) return poly;
  const std::size_t step = (poly.size() + cap - 1) / cap;
  std::vector<Point> out;
  for (std::size_t i = 0; i < poly.size(); i += step) out.push_back(poly[i]);
  return out;
}

}  // namespace detail

/// Normalizes S_h(x0) with normalize_domain applied to the hull of its
/// level curve and resamples w (cubic) and u, phi (bilinear, which keeps
/// u* >= phi* node by node) onto a lattice of the given spacing covering
/// T S_h(x0). u and phi must share the lattice of w.
inline RescaledProblem rescale_problem(const ScalarField& w, const ScalarField& u, const ScalarField& phi,
                                       const Point& x0, double h, double spacing = 1.0 / 64) {
  if (!w.grid().same_lattice(u.grid()) || !w.grid().same_lattice(phi.grid())) {
    throw InvalidInput("w, u and phi must share a lattice");
  }
  if (!(spacing > 0.0)) throw InvalidInput("rescale spacing must be positive");
  const int dim = w.grid().dim();
  const Section s = extract_section(w, x0, h);
  const auto jet = w.taylor(x0);
  const double det0 = det_dim(jet->hessian, dim);
  if (!(det0 > 0.0)) throw PreconditionViolation("det D^2 w vanishes at x0");

  ConvexDomain body = ConvexDomain::interval(s.boundary.points[0].x(), dim == 1 ? s.boundary.points[1].x() : 1.0);
  if (dim == 2) body = ConvexDomain::polygon(detail::cap_vertices(convex_hull(s.boundary.points), 256));
  AffineMap t = AffineMap::identity(dim);
  if (dim == 1) {
    const double a = s.boundary.points[0].x(), b = s.boundary.points[1].x();
    Mat2 m = Mat2::Identity();
    m(0, 0) = 2.0 / (b - a);
    t = AffineMap(m, Point(-(a + b) / (b - a), 0.0), 1);
  } else {
    t = normalize_domain(body);
  }

  std::vector<Point> img;
  if (dim == 1) {
    img = {t(s.boundary.points[0]), t(s.boundary.points[1])};
  } else {
    for (const Point& v : body.vertices()) img.push_back(t(v));
  }
  const ConvexDomain target_domain =
      dim == 1 ? ConvexDomain::interval(img[0].x(), img[1].x()) : ConvexDomain::polygon(convex_hull(img));
  const auto target = Grid::covering(target_domain, spacing);

  const double k = std::pow(std::abs(t.det()), 2.0 / dim) / std::pow(det0, 1.0 / dim);
  const ScalarField shifted = s.shifted.map([h](double v, const Point&) { return v - h; });
  RescaledProblem r{t,
                    k,
                    apply_affine(t, shifted, *target, Interpolation::kCubic).map([k](double v, const Point&) { return k * v; }),
                    apply_affine(t, u, *target, Interpolation::kBilinear),
                    apply_affine(t, phi, *target, Interpolation::kBilinear),
                    t(dim == 1 ? Point(x0.x(), 0.0) : x0),
                    det0};

  r.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < r.u_star.size(); ++idx) {
    if (r.u_star.grid().is_active(idx) && std::isfinite(r.u_star[idx]) && std::isfinite(r.phi_star[idx])) {
      r.min_gap = std::min(r.min_gap, r.u_star[idx] - r.phi_star[idx]);
    }
  }

  // Determinant of the source picture at the nodes, interpolated at T^{-1} y.
  std::vector<double> dets(w.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t idx = 0; idx < w.size(); ++idx) {
    if (const auto hs = w.node_hessian(idx)) dets[idx] = det_dim(*hs, dim);
  }
  const ScalarField det_field(w.grid_ptr(), std::move(dets));
  const AffineMap inv = t.inverse();
  const Grid& tg = r.w_star.grid();
  for (std::size_t idx = 0; idx < tg.size(); ++idx) {
    if (!tg.is_interior(idx)) continue;
    const auto hs = r.w_star.node_hessian(idx);
    const auto d = det_field.bilinear(inv(tg.point(idx)));
    if (!hs || !d) continue;
    r.det_ratio_deviation = std::max(r.det_ratio_deviation, std::abs(det_dim(*hs, dim) - *d / det0));
    ++r.det_nodes;
  }
  return r;
}

}  // namespace lmo
