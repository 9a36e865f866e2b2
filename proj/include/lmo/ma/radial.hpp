#pragma once

#include "lmo/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace lmo {

/// Adaptive Simpson quadrature with Richardson correction.
inline double adaptive_simpson(const std::function<double(double)>& g, double a, double b, double tol,
                               int max_depth = 48) {
  struct Rec {
    static double run(const std::function<double(double)>& g, double a, double b, double fa, double fm, double fb,
                      double whole, double tol, int depth) {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m);
      const double rm = 0.5 * (m + b);
      const double flm = g(lm);
      const double frm = g(rm);
      const double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
      const double delta = left + right - whole;
      if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
      return run(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
             run(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    }
  };
  if (a == b) return 0.0;
  const double fa = g(a);
  const double fb = g(b);
  const double fm = g(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
  return Rec::run(g, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// Radial convex solution of det D^2 w = f(|x|) on B_R with w(R) = 0.
///
/// For radial w, det D^2 w = w''(w'/r)^{n-1}, so (w')^n = n int_0^r f(s)
/// s^{n-1} ds. The slope is evaluated by quadrature on demand; values come
/// from a cubic Hermite table of w built by quadrature of the slope.
class RadialProfile {
 public:
  RadialProfile(std::function<double(double)> f, double radius, int dim, double tol = 1e-12, int table = 4096)
      : f_(std::move(f)), radius_(radius), dim_(dim), tol_(tol) {
    if (!(radius > 0.0)) throw InvalidInput("radial profile needs a positive radius");
    if (dim != 1 && dim != 2) throw InvalidInput("radial profile dimension must be 1 or 2");
    r_.resize(table + 1);
    mass_.resize(table + 1);
    slope_.resize(table + 1);
    value_.resize(table + 1);
    const auto density = [this](double s) { return f_(s) * std::pow(s, dim_ - 1); };
    for (int i = 0; i <= table; ++i) {
      r_[i] = radius_ * i / table;
      if (f_(r_[i]) <= 0.0) throw InvalidInput("radial density must be positive");
      mass_[i] = i == 0 ? 0.0 : mass_[i - 1] + adaptive_simpson(density, r_[i - 1], r_[i], tol_ / table);
      slope_[i] = slope_from_mass(mass_[i]);
    }
    value_[table] = 0.0;
    const auto slope_fn = [this](double s) { return slope(s); };
    for (int i = table - 1; i >= 0; --i) {
      value_[i] = value_[i + 1] - adaptive_simpson(slope_fn, r_[i], r_[i + 1], tol_ / table);
    }
  }

  double radius() const { return radius_; }

  /// w'(r) for 0 <= r <= R.
  double slope(double r) const {
    const std::size_t i = cell(r);
    const double extra = adaptive_simpson([this](double s) { return f_(s) * std::pow(s, dim_ - 1); }, r_[i], r,
                                          tol_ / static_cast<double>(r_.size()));
    return slope_from_mass(mass_[i] + extra);
  }

  /// w(r) for 0 <= r <= R.
  double value(double r) const {
    const std::size_t i = cell(r);
    if (i + 1 >= r_.size()) return value_.back();
    const double h = r_[i + 1] - r_[i];
    const double t = (r - r_[i]) / h;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    const double h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t);
    const double h11 = t * t * (t - 1);
    return h00 * value_[i] + h10 * h * slope_[i] + h01 * value_[i + 1] + h11 * h * slope_[i + 1];
  }

  const std::vector<double>& table_radii() const { return r_; }
  const std::vector<double>& table_values() const { return value_; }

 private:
  double slope_from_mass(double m) const { return dim_ == 1 ? m : std::sqrt(2.0 * m); }

  std::size_t cell(double r) const {
    if (r < 0.0 || r > radius_ * (1 + 1e-12)) throw InvalidInput("radius outside the profile range");
    const double pos = r / radius_ * static_cast<double>(r_.size() - 1);
    std::size_t i = static_cast<std::size_t>(pos);
    return std::min(i, r_.size() - 1);
  }

  std::function<double(double)> f_;
  double radius_;
  int dim_;
  double tol_;
  std::vector<double> r_;
  std::vector<double> mass_;
  std::vector<double> slope_;
  std::vector<double> value_;
};

/// Oracle entry point: the tabulated radial profile w(r).
inline RadialProfile radial_ma_oracle(std::function<double(double)> f, double radius, int dim) {
  return RadialProfile(std::move(f), radius, dim, 1e-12);
}

}  // namespace lmo
