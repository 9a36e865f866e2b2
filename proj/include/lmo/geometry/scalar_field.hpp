#pragma once

#include "lmo/core/error.hpp"
#include "lmo/core/linalg.hpp"
#include "lmo/geometry/grid.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace lmo {

/// Grid-sampled scalar. Values at exterior nodes are NaN.
class ScalarField {
 public:
  struct Jet {
    double value;
    Point gradient;
    Mat2 hessian;
  };

  ScalarField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw InvalidInput("scalar field needs a grid");
    if (values_.size() != grid_->size()) throw InvalidInput("value count does not match grid");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!grid_->is_active(i)) values_[i] = std::numeric_limits<double>::quiet_NaN();
    }
  }

  static ScalarField from_function(GridPtr grid, const std::function<double(const Point&)>& f) {
    std::vector<double> v(grid->size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (grid->is_active(i)) v[i] = f(grid->point(i));
    }
    return ScalarField(std::move(grid), std::move(v));
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t idx) const { return values_[idx]; }
  double at(int i, int j) const { return values_[grid_->index(i, j)]; }
  std::size_t size() const { return values_.size(); }

  bool usable(int i, int j) const {
    return grid_->in_range(i, j) && grid_->is_active(grid_->index(i, j)) && std::isfinite(at(i, j));
  }

  double max_abs() const {
    double m = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (grid_->is_active(i)) m = std::max(m, std::abs(values_[i]));
    }
    return m;
  }

  /// Bilinear (linear in 1D) interpolation; empty if any corner is unusable.
  std::optional<double> bilinear(const Point& p) const {
    const auto cell = locate(p);
    if (!cell) return std::nullopt;
    const auto [i, j, fx, fy] = *cell;
    if (grid_->dim() == 1) {
      if (!usable(i, 0) || (fx > 0 && !usable(i + 1, 0))) return std::nullopt;
      return fx > 0 ? (1 - fx) * at(i, 0) + fx * at(i + 1, 0) : at(i, 0);
    }
    double acc = 0.0;
    for (int b = 0; b <= 1; ++b) {
      for (int a = 0; a <= 1; ++a) {
        const double wgt = (a ? fx : 1 - fx) * (b ? fy : 1 - fy);
        if (wgt == 0.0) continue;
        if (!usable(i + a, j + b)) return std::nullopt;
        acc += wgt * at(i + a, j + b);
      }
    }
    if (!usable(i, j)) return std::nullopt;
    return acc;
  }

  /// Tensor-product cubic Lagrange interpolation on the surrounding 4x4
  /// nodes (4 in 1D); exact on polynomials of degree three per axis. Falls
  /// back to bilinear where the wide stencil is unavailable.
  std::optional<double> cubic(const Point& p) const {
    const auto cell = locate(p);
    if (!cell) return std::nullopt;
    const auto [i, j, fx, fy] = *cell;
    const auto wx = lagrange4(fx);
    if (grid_->dim() == 1) {
      double acc = 0.0;
      for (int a = 0; a < 4; ++a) {
        if (!usable(i - 1 + a, 0)) return bilinear(p);
        acc += wx[a] * at(i - 1 + a, 0);
      }
      return acc;
    }
    const auto wy = lagrange4(fy);
    double acc = 0.0;
    for (int b = 0; b < 4; ++b) {
      for (int a = 0; a < 4; ++a) {
        if (!usable(i - 1 + a, j - 1 + b)) return bilinear(p);
        acc += wx[a] * wy[b] * at(i - 1 + a, j - 1 + b);
      }
    }
    return acc;
  }

  /// Centered-difference gradient at a node; empty when a neighbour is missing.
  std::optional<Point> node_gradient(std::size_t idx) const {
    const int i = grid_->ix(idx);
    const int j = grid_->iy(idx);
    const double h = grid_->spacing();
    if (!usable(i - 1, j) || !usable(i + 1, j)) return std::nullopt;
    const double gx = (at(i + 1, j) - at(i - 1, j)) / (2 * h);
    if (grid_->dim() == 1) return Point(gx, 0.0);
    if (!usable(i, j - 1) || !usable(i, j + 1)) return std::nullopt;
    return Point(gx, (at(i, j + 1) - at(i, j - 1)) / (2 * h));
  }

  /// Centered-difference Hessian at a node (mixed term by the 4-point cross).
  std::optional<Mat2> node_hessian(std::size_t idx) const {
    const int i = grid_->ix(idx);
    const int j = grid_->iy(idx);
    const double h2 = grid_->spacing() * grid_->spacing();
    if (!usable(i, j) || !usable(i - 1, j) || !usable(i + 1, j)) return std::nullopt;
    Mat2 hs = Mat2::Zero();
    hs(0, 0) = (at(i + 1, j) - 2 * at(i, j) + at(i - 1, j)) / h2;
    if (grid_->dim() == 1) return hs;
    for (auto [a, b] : {std::pair{0, -1}, {0, 1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}}) {
      if (!usable(i + a, j + b)) return std::nullopt;
    }
    hs(1, 1) = (at(i, j + 1) - 2 * at(i, j) + at(i, j - 1)) / h2;
    hs(0, 1) = hs(1, 0) = (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) / (4 * h2);
    return hs;
  }

  /// Second-order Taylor expansion from the nearest node with a complete
  /// 3x3 stencil. Exact (value, gradient, Hessian) on quadratics.
  std::optional<Jet> taylor(const Point& p) const {
    const Point q = grid_->lattice_coords(p);
    const int ci = static_cast<int>(std::lround(q.x()));
    const int cj = grid_->dim() == 1 ? 0 : static_cast<int>(std::lround(q.y()));
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    const int reach = grid_->dim() == 1 ? 0 : 2;
    for (int dj = -reach; dj <= reach; ++dj) {
      for (int di = -2; di <= 2; ++di) {
        const int i = ci + di;
        const int j = cj + dj;
        if (!grid_->in_range(i, j)) continue;
        const std::size_t idx = grid_->index(i, j);
        if (!node_hessian(idx) || !node_gradient(idx)) continue;
        const double d = (grid_->point(idx) - p).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = idx;
        }
      }
    }
    if (!best) return std::nullopt;
    const Mat2 hs = *node_hessian(*best);
    const Point g = *node_gradient(*best);
    Point d = p - grid_->point(*best);
    if (grid_->dim() == 1) d.y() = 0.0;
    return Jet{values_[*best] + g.dot(d) + 0.5 * d.dot(hs * d), g + hs * d, hs};
  }

  /// Pointwise map over active nodes.
  ScalarField map(const std::function<double(double, const Point&)>& f) const {
    std::vector<double> v(values_.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (grid_->is_active(i)) v[i] = f(values_[i], grid_->point(i));
    }
    return ScalarField(grid_, std::move(v));
  }

 private:
  struct Cell {
    int i, j;
    double fx, fy;
  };

  std::optional<Cell> locate(const Point& p) const {
    const Point q = grid_->lattice_coords(p);
    auto split = [](double c, int n) -> std::optional<std::pair<int, double>> {
      double fl = std::floor(c);
      double fr = c - fl;
      if (fr > 1 - 1e-9) {
        fl += 1;
        fr = 0;
      } else if (fr < 1e-9) {
        fr = 0;
      }
      const int k = static_cast<int>(fl);
      if (k < 0 || k >= n || (fr > 0 && k + 1 >= n)) return std::nullopt;
      return std::pair{k, fr};
    };
    const auto sx = split(q.x(), grid_->nx());
    if (!sx) return std::nullopt;
    if (grid_->dim() == 1) return Cell{sx->first, 0, sx->second, 0.0};
    const auto sy = split(q.y(), grid_->ny());
    if (!sy) return std::nullopt;
    return Cell{sx->first, sy->first, sx->second, sy->second};
  }

  // Cubic Lagrange weights for nodes at -1, 0, 1, 2 evaluated at t.
  static std::array<double, 4> lagrange4(double t) {
    return {-t * (t - 1) * (t - 2) / 6.0, (t + 1) * (t - 1) * (t - 2) / 2.0, -(t + 1) * t * (t - 2) / 2.0,
            (t + 1) * t * (t - 1) / 6.0};
  }

  GridPtr grid_;
  std::vector<double> values_;
};

}  // namespace lmo
