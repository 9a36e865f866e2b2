#pragma once

#include "lmo/core/error.hpp"
#include "lmo/core/linalg.hpp"
#include "lmo/geometry/grid.hpp"
#include "lmo/geometry/io.hpp"
#include "lmo/geometry/scalar_field.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace lmo {

/// Per-node symmetric matrix field. In one dimension only W11 is used.
///
/// Nodes where the source data could not produce a value (missing
/// neighbours, exterior) are flagged invalid and hold NaN.
class TensorField {
 public:
  explicit TensorField(GridPtr grid)
      : grid_(std::move(grid)),
        w11_(grid_->size(), std::numeric_limits<double>::quiet_NaN()),
        w12_(grid_->size(), std::numeric_limits<double>::quiet_NaN()),
        w22_(grid_->size(), std::numeric_limits<double>::quiet_NaN()),
        valid_(grid_->size(), 0) {}

  /// Constant matrix on every active node.
  static TensorField constant(GridPtr grid, const Mat2& m) {
    TensorField t(std::move(grid));
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.grid().is_active(i)) t.set(i, m);
    }
    return t;
  }

  static TensorField from_function(GridPtr grid, const std::function<Mat2(const Point&)>& f) {
    TensorField t(std::move(grid));
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.grid().is_active(i)) t.set(i, f(t.grid().point(i)));
    }
    return t;
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return valid_.size(); }
  bool valid(std::size_t idx) const { return valid_[idx] != 0; }

  std::size_t valid_count() const {
    std::size_t c = 0;
    for (auto v : valid_) c += v;
    return c;
  }

  /// Stores the symmetric part of `m`.
  void set(std::size_t idx, const Mat2& m) {
    w11_[idx] = m(0, 0);
    if (grid_->dim() == 1) {
      w12_[idx] = 0.0;
      w22_[idx] = 0.0;
    } else {
      w12_[idx] = 0.5 * (m(0, 1) + m(1, 0));
      w22_[idx] = m(1, 1);
    }
    valid_[idx] = 1;
  }

  void invalidate(std::size_t idx) {
    w11_[idx] = w12_[idx] = w22_[idx] = std::numeric_limits<double>::quiet_NaN();
    valid_[idx] = 0;
  }

  /// Matrix at a node; in 1D the unused block is zero.
  Mat2 at(std::size_t idx) const {
    Mat2 m;
    m << w11_[idx], w12_[idx], w12_[idx], w22_[idx];
    return m;
  }

  double w11(std::size_t idx) const { return w11_[idx]; }
  double w12(std::size_t idx) const { return w12_[idx]; }
  double w22(std::size_t idx) const { return w22_[idx]; }

  /// CSV `x,y,W11,W12,W22` over valid nodes in row-major order.
  std::string csv() const {
    std::ostringstream out;
    out << "x,y,W11,W12,W22\n";
    for (std::size_t i = 0; i < size(); ++i) {
      if (!valid(i)) continue;
      const Point p = grid_->point(i);
      out << fmt17(p.x()) << ',' << fmt17(p.y()) << ',' << fmt17(w11_[i]) << ',' << fmt17(w12_[i]) << ','
          << fmt17(w22_[i]) << '\n';
    }
    return out.str();
  }

 private:
  GridPtr grid_;
  std::vector<double> w11_;
  std::vector<double> w12_;
  std::vector<double> w22_;
  std::vector<std::uint8_t> valid_;
};

/// Centered second differences (mixed term by the 4-point cross). Nodes
/// without a complete 3x3 neighbourhood of finite values are left invalid.
inline TensorField discrete_hessian(const ScalarField& w) {
  TensorField h(w.grid_ptr());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!w.grid().is_active(i)) continue;
    if (auto m = w.node_hessian(i)) h.set(i, *m);
  }
  return h;
}

/// Adjugate of each valid matrix: [[H22, -H12], [-H12, H11]] in 2D, [1] in 1D.
inline TensorField cofactor_field(const TensorField& hess) {
  TensorField w(hess.grid_ptr());
  const int dim = hess.grid().dim();
  for (std::size_t i = 0; i < hess.size(); ++i) {
    if (!hess.valid(i)) continue;
    Mat2 c = Mat2::Zero();
    if (dim == 1) {
      c(0, 0) = 1.0;
    } else {
      c << hess.w22(i), -hess.w12(i), -hess.w12(i), hess.w11(i);
    }
    w.set(i, c);
  }
  return w;
}

/// Shorthand for cofactor_field(discrete_hessian(w)).
inline TensorField cofactor_of(const ScalarField& w) { return cofactor_field(discrete_hessian(w)); }

}  // namespace lmo
