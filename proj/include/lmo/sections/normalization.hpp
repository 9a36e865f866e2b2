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
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace lmo {

struct IterationParams {
  double h0 = 0.125;         // base height
  double theta = 0.2;        // exponent parameter in (0, 1/5]
  double eps = 0.0;          // determinant pinch of the input
  int k_max = 4;
  double c_cfg = 1.0;        // constant of the admissibility check on eps
  double resample_spacing = 1.0 / 128;  // lattice spacing of each re-expanded picture
  double min_cells = 10.0;   // resolution floor: section diameter in original cells
  double mvee_tol = 1e-12;
  double det_slack = 1e-6;   // allowance on top of the pinch for discretization error

  void validate() const {
    if (!(h0 > 0.0 && h0 < 1.0)) throw InvalidInput("h0 must lie in (0, 1)");
    if (!(theta > 0.0 && theta <= 0.2)) throw InvalidInput("theta must lie in (0, 1/5]");
    if (!(eps >= 0.0 && eps < 1.0)) throw InvalidInput("eps must lie in [0, 1)");
    if (k_max < 1) throw InvalidInput("k_max must be at least 1");
    if (!(c_cfg > 0.0)) throw InvalidInput("c_cfg must be positive");
    if (!(resample_spacing > 0.0)) throw InvalidInput("resample_spacing must be positive");
  }

  /// sqrt(eps) <= theta h0 ln(1/h0) / (2 c_cfg).
  bool admissible() const { return std::sqrt(eps) <= theta * h0 * std::log(1.0 / h0) / (2.0 * c_cfg); }
};

/// Measurements of h0^{-k/2} A_k S_{h0^k}(x0) after det-normalization.
struct NormalizationStep {
  int k = 0;
  Mat2 a = Mat2::Identity();  // A_k, symmetric factors composed, det 1
  Mat2 step = Mat2::Identity();  // factor contributed by step k
  double delta = 0.0;
  double r_in = 0.0;   // about the image of x0
  double r_out = 0.0;
  Point p = Point::Zero();   // image of x0 relative to the MVEE center
  double r_in_original = 0.0;  // inradius of S_{h0^k}(x0) in the input coordinates
};

struct NormalizationResult {
  std::vector<NormalizationStep> steps;
  std::string stop_reason;       // empty when k_max steps were taken
  double det_at_center = 0.0;    // det_h D^2 w(x0) used to normalize
  double det_pinch = 0.0;        // max |det_h D^2 w / det_h D^2 w(x0) - 1| over S_{h0}(x0)
  bool admissible = true;
};

namespace detail {

// Every m-th vertex of a convex polygon so that at most `cap` remain.
inline std::vector<Point> decimate(const std::vector<Point>& poly, std::size_t cap) {
  if (poly.size() <= cap) return poly;
  const std::size_t step = (poly.size() + cap - 1) / cap;
  std::vector<Point> out;
  for (std::size_t i = 0; i < poly.size(); i += step) out.push_back(poly[i]);
  return out;
}

// A = (M / det(M)^{1/n})^{1/2}: symmetric positive definite, det 1.
inline Mat2 unit_det_root(const Mat2& shape, int dim) {
  if (dim == 1) return Mat2::Identity();
  return spd_sqrt(shape / std::sqrt(shape.determinant()));
}

}  // namespace detail

/// Iterated normalization of sections at x0. The input is divided by
/// det_h D^2 w(x0)^{1/n}. Step k extracts S_{h0}(x0) of the current picture
/// G_{k-1}, fits its MVEE, and records the radii of h0^{-1/2} A (S - x0)
/// about the origin; the picture is then re-expanded as
///   G_k(y) = (G_{k-1}(x0 + h0^{1/2} A^{-1} y) - G_{k-1}(x0) - DG_{k-1}(x0) h0^{1/2} A^{-1} y) / h0
/// on a fresh lattice, so S_{h0}(G_k) is the image of S_{h0^{k+1}}(w).
///
/// Stops early (with a reason) when the section diameter in the original
/// coordinates drops below min_cells cells or a section escapes its picture.
inline NormalizationResult iterate_normalization(const ScalarField& w, const Point& x0, const IterationParams& params) {
  params.validate();
  const Grid& g0 = w.grid();
  const int dim = g0.dim();
  NormalizationResult res;
  res.admissible = params.admissible();
  const auto jet = w.taylor(x0);
  if (!jet) throw InvalidInput("normalization center lacks a complete stencil");
  const double det0 = det_dim(jet->hessian, dim);
  if (!(det0 > 0.0)) throw PreconditionViolation("det D^2 w vanishes at the normalization center");
  res.det_at_center = det0;

  // Pinch check on the first section.
  {
    const Section s = extract_section(w, x0, params.h0);
    for (std::size_t idx : s.nodes) {
      const auto hs = w.node_hessian(idx);
      if (!hs) continue;
      res.det_pinch = std::max(res.det_pinch, std::abs(det_dim(*hs, dim) / det0 - 1.0));
    }
    const double allowed = 2 * params.eps / (1 - params.eps) + params.det_slack;
    if (res.det_pinch > allowed) {
      throw PreconditionViolation("det_h D^2 w varies by " + std::to_string(res.det_pinch) +
                                  " on S_h0, more than the pinch allows");
    }
  }

  const double scale = std::pow(det0, 1.0 / dim);
  ScalarField pic = w.map([scale](double v, const Point&) { return v / scale; });
  Point center = dim == 1 ? Point(x0.x(), 0.0) : x0;
  AffineMap to_pic = AffineMap::identity(dim);  // original -> current picture
  Mat2 acc = Mat2::Identity();
  const double sq = std::sqrt(params.h0);

  for (int k = 1; k <= params.k_max; ++k) {
    std::optional<Section> found;
    try {
      found = extract_section(pic, center, params.h0);
    } catch (const SectionEscapes& e) {
      res.stop_reason = std::string("section escaped at step ") + std::to_string(k) + ": " + e.what();
      break;
    }
    const Section& s = *found;
    const AffineMap back = to_pic.inverse();
    double rin_orig = std::numeric_limits<double>::infinity();
    for (const Point& v : s.boundary.points) rin_orig = std::min(rin_orig, (back(v) - back(center)).norm());
    if (2 * rin_orig < params.min_cells * g0.spacing()) {
      res.stop_reason = "resolution floor reached at step " + std::to_string(k);
      break;
    }
    const Ellipsoid e = mvee(s.boundary.points, params.mvee_tol, dim);
    const Mat2 a = detail::unit_det_root(e.shape, dim);
    NormalizationStep st;
    st.k = k;
    st.step = a;
    acc = a * acc;
    st.a = acc;
    st.r_in_original = rin_orig;
    st.r_in = std::numeric_limits<double>::infinity();
    for (const Point& v : s.boundary.points) {
      const double r = (a * (v - center)).norm() / sq;
      st.r_in = std::min(st.r_in, r);
      st.r_out = std::max(st.r_out, r);
    }
    st.p = a * (center - e.center) / sq;
    st.delta = std::max(std::abs(st.r_out / std::numbers::sqrt2 - 1.0), std::abs(1.0 - st.r_in / std::numbers::sqrt2));
    res.steps.push_back(st);
    if (k == params.k_max) break;

    // Re-expand around the center on a lattice covering a shrunken image of S.
    const AffineMap t(a / sq, -(a / sq) * center, dim);
    ConvexDomain target_domain = ConvexDomain::interval(-1, 1);
    if (dim == 1) {
      const double lo = t(s.boundary.points[0]).x();
      const double hi = t(s.boundary.points[1]).x();
      target_domain = ConvexDomain::interval(0.75 * lo, 0.75 * hi);
    } else {
      std::vector<Point> img;
      for (const Point& v : s.boundary.points) img.push_back(0.75 * t(v));
      target_domain = ConvexDomain::polygon(detail::decimate(convex_hull(img), 128));
    }
    const auto target = Grid::covering(target_domain, params.resample_spacing);
    const ScalarField raw = apply_affine(t, pic, *target, Interpolation::kCubic);
    const AffineMap tinv = t.inverse();
    const double value = s.value;
    const Point grad = s.gradient;
    const double h0 = params.h0;
    pic = raw.map([&](double v, const Point& y) { return (v - value - grad.dot(tinv(y) - center)) / h0; });
    to_pic = t.compose(to_pic);
    center = Point::Zero();
  }
  return res;
}

/// Smallest C with delta_k <= (C sqrt h0)^k + 2 C sqrt(eps) / h0 at every
/// step. The profile is increasing in C, so bisection applies. The profile
/// is a nontrivial decaying bound only when C sqrt(h0) < 1.
struct RecursionFit {
  double c = 0.0;
  bool contracting = false;  // c sqrt(h0) < 1
  std::vector<double> profile;
};

inline RecursionFit fit_recursion_constant(const std::vector<NormalizationStep>& steps, double h0, double eps) {
  if (steps.empty()) throw InsufficientData("no normalization steps to fit");
  const double sq = std::sqrt(h0);
  const double tail = 2 * std::sqrt(eps) / h0;
  auto dominated = [&](double c) {
    for (const auto& s : steps) {
      if (s.delta > std::pow(c * sq, s.k) + c * tail) return false;
    }
    return true;
  };
  double lo = 0.0, hi = 1.0;
  while (!dominated(hi)) hi *= 2;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (dominated(mid) ? hi : lo) = mid;
  }
  RecursionFit f;
  f.c = hi;
  f.contracting = hi * sq < 1.0;
  for (const auto& s : steps) f.profile.push_back(std::pow(hi * sq, s.k) + hi * tail);
  return f;
}

/// Fitted constants of c_lo h0^{theta k} I <= A_k <= c_hi h0^{-theta k / 2} I.
struct ABounds {
  double c_hi = 0.0;  // max_k lambda_max(A_k) h0^{theta k / 2}
  double c_lo = 0.0;  // min_k lambda_min(A_k) / h0^{theta k}
};

inline ABounds fit_a_bounds(const std::vector<NormalizationStep>& steps, double h0, double theta, int dim = 2) {
  ABounds b;
  b.c_lo = std::numeric_limits<double>::infinity();
  for (const auto& s : steps) {
    double smin, smax;
    if (dim == 1) {
      smin = smax = std::abs(s.a(0, 0));
    } else {
      const SymEigen2 e = sym_eigen(s.a.transpose() * s.a);
      smin = std::sqrt(e.values[0]);
      smax = std::sqrt(e.values[1]);
    }
    b.c_hi = std::max(b.c_hi, smax * std::pow(h0, theta * s.k / 2));
    b.c_lo = std::min(b.c_lo, smin / std::pow(h0, theta * s.k));
  }
  return b;
}

}  // namespace lmo
