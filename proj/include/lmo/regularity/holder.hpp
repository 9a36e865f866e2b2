#pragma once

#include "lmo/core/error.hpp"
#include "lmo/core/fit.hpp"
#include "lmo/geometry/scalar_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

namespace lmo {

/// Centered-difference gradient of u as two node fields (NaN where a
/// neighbour is missing), interpolated bilinearly off the nodes.
class GradientField {
 public:
  explicit GradientField(const ScalarField& u) : gx_(component(u, 0)), gy_(component(u, 1)), dim_(u.grid().dim()) {}

  std::optional<Point> at(const Point& p) const {
    const auto x = gx_.bilinear(p);
    if (!x) return std::nullopt;
    if (dim_ == 1) return Point(*x, 0.0);
    const auto y = gy_.bilinear(p);
    if (!y) return std::nullopt;
    return Point(*x, *y);
  }

 private:
  static ScalarField component(const ScalarField& u, int c) {
    std::vector<double> v(u.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (const auto g = u.node_gradient(i)) v[i] = (*g)(c);
    }
    return ScalarField(u.grid_ptr(), std::move(v));
  }

  ScalarField gx_;
  ScalarField gy_;
  int dim_;
};

/// Du of the obstacle solution at a point: Dphi in the contact set
/// (u - phi <= tol_contact, interpolated), the interpolated centered
/// gradient of u elsewhere.
class SolutionGradient {
 public:
  SolutionGradient(const ScalarField& u, const ScalarField& phi, double tol_contact)
      : du_(u), u_(u), phi_(phi), tol_(tol_contact) {}

  std::optional<double> gap(const Point& p) const {
    const auto a = u_.bilinear(p);
    const auto b = phi_.bilinear(p);
    if (!a || !b) return std::nullopt;
    return *a - *b;
  }

  bool in_contact(const Point& p) const {
    const auto g = gap(p);
    return g && *g <= tol_;
  }

  std::optional<Point> at(const Point& p) const {
    if (in_contact(p)) return obstacle_gradient(p);
    return du_.at(p);
  }

  std::optional<Point> obstacle_gradient(const Point& p) const {
    const auto jet = phi_.taylor(p);
    if (!jet) return std::nullopt;
    return u_.grid().dim() == 1 ? Point(jet->gradient.x(), 0.0) : jet->gradient;
  }

 private:
  GradientField du_;
  const ScalarField& u_;
  const ScalarField& phi_;
  double tol_;
};

/// M(r) = max over noncontact ring samples of |Du(y) - Du(y0)| and the
/// log-log slope of M against r.
struct ExponentFit {
  Point y0;
  std::vector<double> radii;    // radii that produced a usable sample
  std::vector<double> m;        // M(r) at those radii
  std::vector<int> samples;     // noncontact samples per usable radius
  double alpha = 0.0;
  double alpha_se = 0.0;
  double band = 0.0;            // 2 standard errors
  double rms = 0.0;
};

/// Samples 64 angles per radius (two points per radius in 1D). Du(y0) is
/// Dphi(y0). Radii must be strictly decreasing.
inline ExponentFit holder_exponent(const ScalarField& u, const ScalarField& phi, const Point& y0,
                                   const std::vector<double>& radii, double tol_contact, int angles = 64) {
  if (!u.grid().same_lattice(phi.grid())) throw InvalidInput("u and phi must share a lattice");
  for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
    if (!(radii[i + 1] < radii[i])) throw InvalidInput("radii must be strictly decreasing");
  }
  const SolutionGradient du(u, phi, tol_contact);
  const int dim = u.grid().dim();
  const Point c = dim == 1 ? Point(y0.x(), 0.0) : y0;
  const auto d0 = du.obstacle_gradient(c);
  if (!d0) throw InvalidInput("obstacle gradient unavailable at y0");
  ExponentFit f;
  f.y0 = c;
  for (double r : radii) {
    double best = -1.0;
    int used = 0;
    const int n = dim == 1 ? 2 : angles;
    for (int k = 0; k < n; ++k) {
      const double t = 2 * std::numbers::pi * k / n;
      const Point y = dim == 1 ? Point(c.x() + (k == 0 ? r : -r), 0.0) : Point(c + r * Point(std::cos(t), std::sin(t)));
      const auto gap = du.gap(y);
      if (!gap || *gap <= tol_contact) continue;
      const auto g = du.at(y);
      if (!g) continue;
      best = std::max(best, (*g - *d0).norm());
      ++used;
    }
    if (used > 0 && best > 0.0) {
      f.radii.push_back(r);
      f.m.push_back(best);
      f.samples.push_back(used);
    }
  }
  if (f.radii.size() < 4) throw InsufficientData("fewer than four radii with noncontact samples");
  const LineFit lf = fit_loglog(f.radii, f.m);
  f.alpha = lf.slope;
  f.alpha_se = lf.slope_se;
  f.band = 2 * lf.slope_se;
  f.rms = lf.rms;
  return f;
}

/// Dyadic radii 2^{-first}, ..., 2^{-last}.
inline std::vector<double> dyadic_radii(int first, int last) {
  std::vector<double> r;
  for (int k = first; k <= last; ++k) r.push_back(std::ldexp(1.0, -k));
  return r;
}

struct PairSample {
  Point y1;
  Point y2;
};

struct PairResult {
  int case_id = 0;         // 1 or 2; 0 when skipped
  double distance = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double ratio = 0.0;      // |Du(y1) - Du(y2)| / |y1 - y2|^gamma
  double chain = 0.0;      // Case 2: (|y1' - y2'| / |y1 - y2|)^gamma
};

/// Hoelder quotients split by the two cases: Case 1 when
/// |y1 - y2| <= max(d1, d2) / 2 with d_i the distance to the free boundary,
/// Case 2 otherwise. In Case 2, y_i' is the nearest free-boundary point and
/// the chain constant is checked against 3 * 3^gamma.
struct ModulusReport {
  double gamma = 0.0;
  std::vector<PairResult> pairs;
  double case1_max = 0.0;
  double case2_max = 0.0;
  int case1_count = 0;
  int case2_count = 0;
  int skipped_contact = 0;   // both points in the contact set
  int skipped_undefined = 0; // gradient unavailable
  double chain_max = 0.0;
  bool chain_holds = true;
};

inline ModulusReport two_case_modulus(const ScalarField& u, const ScalarField& phi, const std::vector<PairSample>& pairs,
                                      const std::vector<Point>& free_boundary, double gamma, double tol_contact) {
  if (free_boundary.empty()) throw EmptyFreeBoundary("two-case modulus needs free-boundary points");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInput("gamma must lie in [0, 1]");
  const SolutionGradient du(u, phi, tol_contact);
  auto nearest = [&](const Point& y) {
    std::pair<double, Point> best{std::numeric_limits<double>::infinity(), y};
    for (const Point& q : free_boundary) {
      const double d = (q - y).norm();
      if (d < best.first) best = {d, q};
    }
    return best;
  };
  ModulusReport rep;
  rep.gamma = gamma;
  const double chain_bound = 3 * std::pow(3.0, gamma);
  for (const PairSample& s : pairs) {
    PairResult r;
    r.distance = (s.y1 - s.y2).norm();
    if (!(r.distance > 0.0)) {
      ++rep.skipped_undefined;
      rep.pairs.push_back(r);
      continue;
    }
    if (du.in_contact(s.y1) && du.in_contact(s.y2)) {
      ++rep.skipped_contact;
      rep.pairs.push_back(r);
      continue;
    }
    const auto g1 = du.at(s.y1);
    const auto g2 = du.at(s.y2);
    if (!g1 || !g2) {
      ++rep.skipped_undefined;
      rep.pairs.push_back(r);
      continue;
    }
    const auto [d1, p1] = nearest(s.y1);
    const auto [d2, p2] = nearest(s.y2);
    r.d1 = d1;
    r.d2 = d2;
    r.ratio = (*g1 - *g2).norm() / std::pow(r.distance, gamma);
    if (r.distance <= 0.5 * std::max(d1, d2)) {
      r.case_id = 1;
      ++rep.case1_count;
      rep.case1_max = std::max(rep.case1_max, r.ratio);
    } else {
      r.case_id = 2;
      ++rep.case2_count;
      rep.case2_max = std::max(rep.case2_max, r.ratio);
      r.chain = std::pow((p1 - p2).norm() / r.distance, gamma);
      rep.chain_max = std::max(rep.chain_max, r.chain);
      if (r.chain > chain_bound) rep.chain_holds = false;
    }
    rep.pairs.push_back(r);
  }
  return rep;
}

}  // namespace lmo
