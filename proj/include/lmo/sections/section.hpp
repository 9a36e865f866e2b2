#pragma once

#include "lmo/core/error.hpp"
#include "lmo/core/linalg.hpp"
#include "lmo/geometry/contour.hpp"
#include "lmo/geometry/domain.hpp"
#include "lmo/geometry/grid.hpp"
#include "lmo/geometry/scalar_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

namespace lmo {

/// Sublevel set S_h(x0) = {x : w(x) <= w(x0) + Dw(x0).(x - x0) + h}.
struct Section {
  Point center;
  double height = 0.0;
  double value = 0.0;  // w(x0)
  Point gradient = Point::Zero();
  ScalarField shifted;                // w minus the tangent plane at x0
  std::vector<std::size_t> nodes;     // grid nodes in the section, row-major
  std::vector<std::uint8_t> member;   // per grid node
  Polyline boundary;                  // closed level curve around x0 (1D: the two endpoints)
  double inradius = 0.0;              // min distance from x0 to the boundary vertices
  double circumradius = 0.0;          // max distance from x0 to the boundary vertices

  const Grid& grid() const { return shifted.grid(); }
  bool contains_node(std::size_t idx) const { return member[idx] != 0; }

  /// Whether `p` lies in the section according to the interpolated shifted field.
  bool contains(const Point& p, double slack = 0.0) const {
    const auto v = shifted.cubic(p);
    return v && *v <= height + slack;
  }
};

namespace detail {

inline bool polygon_winds_around(const std::vector<Point>& poly, const Point& p) {
  double wind = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point a = poly[i] - p;
    const Point b = poly[(i + 1) % poly.size()] - p;
    wind += std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
  }
  return std::abs(wind) > std::numbers::pi;
}

inline std::size_t nearest_node(const Grid& g, const Point& p) {
  const Point q = g.lattice_coords(p);
  const int i = std::clamp(static_cast<int>(std::lround(q.x())), 0, g.nx() - 1);
  const int j = g.dim() == 1 ? 0 : std::clamp(static_cast<int>(std::lround(q.y())), 0, g.ny() - 1);
  return g.index(i, j);
}

}  // namespace detail

/// Extracts S_h(x0) of a discretely convex field. The tangent plane comes
/// from the second-order Taylor jet at x0 (centered differences at the
/// nearest complete node). The node set is the connected component of
/// {shifted <= h} containing the node nearest x0; the boundary is the
/// marching-squares curve at level h with cubic edge roots.
///
/// Throws SectionEscapes when the section reaches a non-interior node or
/// its level curve is not closed inside the grid.
inline Section extract_section(const ScalarField& w, const Point& x0, double h) {
  if (!(h > 0.0)) throw InvalidInput("section height must be positive");
  const Grid& g = w.grid();
  const auto jet = w.taylor(x0);
  if (!jet) throw InvalidInput("section center lacks a complete stencil");
  const Point c = g.dim() == 1 ? Point(x0.x(), 0.0) : x0;
  const Point grad = g.dim() == 1 ? Point(jet->gradient.x(), 0.0) : jet->gradient;
  const double w0 = jet->value;
  Section s{c, h, w0, grad, w.map([&](double v, const Point& p) { return v - w0 - grad.dot(p - c); }), {}, {}, {}, 0,
            0};

  s.member.assign(g.size(), 0);
  const std::size_t start = detail::nearest_node(g, c);
  if (!g.is_interior(start)) throw SectionEscapes("section center is not at an interior node");
  if (!(s.shifted[start] <= h)) throw InvalidInput("section height is below the grid resolution at x0");
  std::deque<std::size_t> queue{start};
  s.member[start] = 1;
  const std::vector<Offset> steps = g.dim() == 1 ? std::vector<Offset>{{1, 0}, {-1, 0}}
                                                 : std::vector<Offset>{{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  while (!queue.empty()) {
    const std::size_t idx = queue.front();
    queue.pop_front();
    if (!g.is_interior(idx)) throw SectionEscapes("section reaches the domain boundary");
    for (Offset o : steps) {
      const auto n = g.neighbor(idx, o);
      if (!n || s.member[*n]) continue;
      const double v = s.shifted[*n];
      if (!std::isfinite(v)) throw SectionEscapes("section reaches nodes without data");
      if (v <= h) {
        s.member[*n] = 1;
        queue.push_back(*n);
      }
    }
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (s.member[i]) s.nodes.push_back(i);
  }

  if (g.dim() == 1) {
    std::optional<Point> left, right;
    for (const Point& p : level_crossings_1d(s.shifted, h, EdgeRoot::kCubic)) {
      if (p.x() <= c.x()) left = p;
      else if (!right) right = p;
    }
    if (!left || !right) throw SectionEscapes("section endpoints not found inside the grid");
    s.boundary.points = {*left, *right};
  } else {
    bool found = false;
    for (auto& pl : contour_lines(s.shifted, h, EdgeRoot::kCubic)) {
      if (pl.closed && pl.points.size() >= 3 && detail::polygon_winds_around(pl.points, c)) {
        s.boundary = std::move(pl);
        found = true;
        break;
      }
    }
    if (!found) throw SectionEscapes("no closed level curve around the center");
  }
  s.inradius = std::numeric_limits<double>::infinity();
  for (const Point& p : s.boundary.points) {
    const double d = (p - c).norm();
    s.inradius = std::min(s.inradius, d);
    s.circumradius = std::max(s.circumradius, d);
  }
  return s;
}

/// Largest distance (in cells) from a grid node that lies inside the convex
/// hull of the section nodes but outside the node set to the hull boundary.
/// Zero for a lattice-convex node set.
inline double section_convexity_defect(const Section& s) {
  const Grid& g = s.grid();
  if (g.dim() == 1 || s.nodes.size() < 3) return 0.0;
  std::vector<Point> pts;
  for (std::size_t idx : s.nodes) pts.push_back(g.point(idx));
  const std::vector<Point> hull = convex_hull(pts);
  if (hull.size() < 3) return 0.0;
  const ConvexDomain poly = ConvexDomain::polygon(hull);
  const auto [lo, hi] = poly.bounds();
  double worst = 0.0;
  const Point qlo = g.lattice_coords(lo);
  const Point qhi = g.lattice_coords(hi);
  for (int j = std::max(0, static_cast<int>(std::floor(qlo.y()))); j <= std::min(g.ny() - 1, static_cast<int>(std::ceil(qhi.y()))); ++j) {
    for (int i = std::max(0, static_cast<int>(std::floor(qlo.x()))); i <= std::min(g.nx() - 1, static_cast<int>(std::ceil(qhi.x()))); ++i) {
      const std::size_t idx = g.index(i, j);
      if (s.member[idx]) continue;
      const double d = poly.signed_distance(g.point(idx));
      if (d < 0.0) worst = std::max(worst, -d / g.spacing());
    }
  }
  return worst;
}

/// Distance from `origin` along the unit direction `dir` to the boundary of
/// the closed polygon (origin inside).
inline double ray_exit(const std::vector<Point>& poly, const Point& origin, const Point& dir) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point a = poly[i] - origin;
    const Point e = poly[(i + 1) % poly.size()] - poly[i];
    const double den = dir.x() * e.y() - dir.y() * e.x();
    if (std::abs(den) < 1e-300) continue;
    const double t = (a.x() * e.y() - a.y() * e.x()) / den;
    const double u = (a.x() * dir.y() - a.y() * dir.x()) / den;
    if (t > 0.0 && u >= -1e-12 && u <= 1.0 + 1e-12) best = std::min(best, t);
  }
  return best;
}

/// Area centroid of a closed polygon.
inline Point polygon_centroid(const std::vector<Point>& poly) {
  double a2 = 0.0;
  Point c = Point::Zero();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % poly.size()];
    const double cr = p.x() * q.y() - q.x() * p.y();
    a2 += cr;
    c += cr * (p + q);
  }
  return c / (3.0 * a2);
}

/// Measured half-section inclusions ½S_h ⊂ S_{h/2} ⊂ βS_h, dilations about
/// the center of mass of S_h.
struct EngulfingReport {
  bool half_inclusion = true;  // every point of ½S_h boundary lies in S_{h/2}
  double beta = 0.0;           // smallest dilation factor containing S_{h/2}
};

inline EngulfingReport engulfing_check(const ScalarField& w, const Point& x0, double h, double slack = 1e-9) {
  const Section big = extract_section(w, x0, h);
  const Section half = extract_section(w, x0, 0.5 * h);
  EngulfingReport r;
  if (w.grid().dim() == 1) {
    const double cm = 0.5 * (big.boundary.points[0].x() + big.boundary.points[1].x());
    const double rl = cm - big.boundary.points[0].x();
    const double rr = big.boundary.points[1].x() - cm;
    for (const Point& p : big.boundary.points) {
      r.half_inclusion = r.half_inclusion && half.contains(Point(cm + 0.5 * (p.x() - cm), 0.0), slack * h);
    }
    r.beta = std::max((cm - half.boundary.points[0].x()) / rl, (half.boundary.points[1].x() - cm) / rr);
    return r;
  }
  const Point cm = polygon_centroid(big.boundary.points);
  for (const Point& p : big.boundary.points) {
    r.half_inclusion = r.half_inclusion && half.contains(cm + 0.5 * (p - cm), slack * h);
  }
  for (const Point& p : half.boundary.points) {
    const Point d = p - cm;
    const double len = d.norm();
    if (len == 0.0) continue;
    r.beta = std::max(r.beta, len / ray_exit(big.boundary.points, cm, d / len));
  }
  return r;
}

}  // namespace lmo
