#pragma once

#include "lmo/core/error.hpp"
#include "lmo/core/linalg.hpp"
#include "lmo/geometry/affine.hpp"
#include "lmo/geometry/domain.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace lmo {

/// {x : (x - c)^T M (x - c) <= 1} with M symmetric positive definite.
struct Ellipsoid {
  Point center = Point::Zero();
  Mat2 shape = Mat2::Identity();
  int dim = 2;

  double level(const Point& x) const {
    const Point d = x - center;
    if (dim == 1) return shape(0, 0) * d.x() * d.x();
    return d.dot(shape * d);
  }
  bool contains(const Point& x, double slack = 0.0) const { return level(x) <= 1.0 + slack; }

  /// Semi-axis lengths, ascending.
  std::vector<double> semi_axes() const {
    if (dim == 1) return {1.0 / std::sqrt(shape(0, 0))};
    const SymEigen2 e = sym_eigen(shape);
    return {1.0 / std::sqrt(e.values[1]), 1.0 / std::sqrt(e.values[0])};
  }

  double volume() const {
    if (dim == 1) return 2.0 / std::sqrt(shape(0, 0));
    return std::numbers::pi / std::sqrt(shape.determinant());
  }
};

struct MveeStats {
  int iterations = 0;
  double gap = 0.0;  // final max(eps+, eps-) of the Todd-Yildirim certificate
};

/// Minimum-volume enclosing ellipsoid of a point set (Khachiyan's
/// first-order method with Todd-Yildirim away steps).
///
/// Stops when every lifted point satisfies g_j <= (n+1)(1+tol) and every
/// support point g_j >= (n+1)(1-tol), which certifies a volume within a
/// factor (1+tol)^{(n+1)/2} of optimal. The result is scaled to contain every
/// input point exactly.
inline Ellipsoid mvee(const std::vector<Point>& input, double tol, int dim = 2, MveeStats* stats = nullptr,
                      int max_iterations = 200000) {
  if (!(tol > 0.0)) throw InvalidInput("mvee tolerance must be positive");
  if (dim != 1 && dim != 2) throw InvalidInput("mvee dimension must be 1 or 2");

  if (dim == 1) {
    if (input.size() < 2) throw DegenerateInput("need at least two points in one dimension");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Point& p : input) {
      lo = std::min(lo, p.x());
      hi = std::max(hi, p.x());
    }
    if (!(hi - lo > 0.0)) throw DegenerateInput("point set has rank 0");
    Ellipsoid e;
    e.dim = 1;
    e.center = Point(0.5 * (lo + hi), 0.0);
    e.shape = Mat2::Identity();
    e.shape(0, 0) = 4.0 / ((hi - lo) * (hi - lo));
    if (stats) *stats = {};
    return e;
  }

  if (input.size() < 3) throw DegenerateInput("need at least n+1 = 3 points");
  // Only hull vertices can support the ellipsoid.
  std::vector<Point> pts = convex_hull(input);
  if (pts.size() < 3) throw DegenerateInput("point set has rank < 2");
  {
    Point mean = Point::Zero();
    for (const Point& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    Mat2 cov = Mat2::Zero();
    double scale = 0.0;
    for (const Point& p : pts) {
      cov += (p - mean) * (p - mean).transpose();
      scale = std::max(scale, (p - mean).squaredNorm());
    }
    const SymEigen2 e = sym_eigen(cov / static_cast<double>(pts.size()));
    if (!(e.values[0] > 1e-14 * scale)) throw DegenerateInput("point set has rank < 2");
  }

  const int m = static_cast<int>(pts.size());
  constexpr int d = 3;  // lifted dimension n + 1
  Eigen::MatrixXd q(d, m);
  for (int j = 0; j < m; ++j) q.col(j) << pts[j].x(), pts[j].y(), 1.0;

  Eigen::VectorXd u = Eigen::VectorXd::Constant(m, 1.0 / m);
  Eigen::VectorXd g(m);
  int it = 0;
  double gap = std::numeric_limits<double>::infinity();
  for (; it < max_iterations; ++it) {
    const Eigen::Matrix3d x = q * u.asDiagonal() * q.transpose();
    const Eigen::Matrix3d xi = x.inverse();
    g = (q.array() * (xi * q).array()).colwise().sum().transpose();
    int jp = 0;
    int jm = -1;
    for (int j = 0; j < m; ++j) {
      if (g(j) > g(jp)) jp = j;
      if (u(j) > 0 && (jm < 0 || g(j) < g(jm))) jm = j;
    }
    const double eps_plus = g(jp) / d - 1.0;
    const double eps_minus = 1.0 - g(jm) / d;
    gap = std::max(eps_plus, eps_minus);
    if (gap <= tol) break;
    if (eps_plus >= eps_minus) {
      const double beta = (g(jp) - d) / (d * (g(jp) - 1.0));
      u *= (1.0 - beta);
      u(jp) += beta;
    } else {
      double beta = (d - g(jm)) / (d * (g(jm) - 1.0));
      const double cap = u(jm) / (1.0 - u(jm));
      beta = std::min(beta, cap);
      u *= (1.0 + beta);
      u(jm) -= beta;
      if (beta == cap) u(jm) = 0.0;
    }
  }
  if (stats) *stats = {it, gap};

  Point c = Point::Zero();
  for (int j = 0; j < m; ++j) c += u(j) * pts[j];
  Mat2 cov = Mat2::Zero();
  for (int j = 0; j < m; ++j) cov += u(j) * (pts[j] - c) * (pts[j] - c).transpose();
  Ellipsoid e;
  e.dim = 2;
  e.center = c;
  e.shape = cov.inverse() / 2.0;
  double worst = 0.0;
  for (const Point& p : input) worst = std::max(worst, e.level(p));
  if (worst > 1.0) e.shape /= worst;
  e.shape = 0.5 * (e.shape + e.shape.transpose());
  return e;
}

/// Distance from `origin` to the boundary of the convex polygon with the
/// given counterclockwise vertices (origin assumed inside).
inline double polygon_inradius_about(const std::vector<Point>& poly, const Point& origin) {
  double r = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point& a = poly[i];
    const Point e = poly[(i + 1) % poly.size()] - a;
    const double t = std::clamp(e.dot(origin - a) / e.squaredNorm(), 0.0, 1.0);
    r = std::min(r, (a + t * e - origin).norm());
  }
  return r;
}

/// Affine map with symmetric positive-definite linear part sending a convex
/// body K into the sandwich B_1 ⊆ T(K) ⊆ B_n.
///
/// With E the MVEE of K, the map S(x) = M^{1/2}(x - c) sends E to B_1 and
/// contains a ball of radius rho >= 1/n inside S(K); T = S / rho. For K an
/// ellipsoid rho = 1 and T(K) = B_1; for a simplex rho = 1/n.
inline AffineMap normalize_domain(const ConvexDomain& k, double tol = 1e-10) {
  const int dim = k.dimension();
  if (k.kind() == ConvexDomain::Kind::kBall) {
    const double s = 1.0 / k.radius();
    Mat2 a = Mat2::Identity() * s;
    if (dim == 1) a(1, 1) = 1.0;
    return AffineMap(a, -(a * k.center()), dim);
  }
  const Ellipsoid e = mvee(k.vertices(), tol, 2);
  const Mat2 s = spd_sqrt(e.shape);
  std::vector<Point> mapped;
  mapped.reserve(k.vertices().size());
  for (const Point& v : k.vertices()) mapped.push_back(s * (v - e.center));
  const double rho = polygon_inradius_about(mapped, Point::Zero());
  if (!(rho > 0.0)) throw DegenerateInput("normalized body has empty interior");
  const Mat2 a = s / rho;
  return AffineMap(a, -(a * e.center), 2);
}

}  // namespace lmo
