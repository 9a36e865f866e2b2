#pragma once

#include "lmo/core/error.hpp"
#include "lmo/core/linalg.hpp"

#include <cmath>

namespace lmo {

/// T(x) = A x + b with invertible A. In one dimension only A(0,0) and b(0)
/// are meaningful; the second axis is carried as the identity.
class AffineMap {
 public:
  AffineMap() : AffineMap(Mat2::Identity(), Point::Zero(), 2) {}

  AffineMap(const Mat2& a, const Point& b, int dim = 2) : a_(a), b_(b), dim_(dim) {
    if (dim_ == 1) {
      a_(0, 1) = a_(1, 0) = 0.0;
      a_(1, 1) = 1.0;
      b_(1) = 0.0;
    }
    if (!(std::abs(a_.determinant()) > 0.0) || !a_.allFinite() || !b_.allFinite()) {
      throw DegenerateInput("affine map requires an invertible linear part");
    }
  }

  static AffineMap identity(int dim = 2) { return AffineMap(Mat2::Identity(), Point::Zero(), dim); }
  static AffineMap translation(const Point& t, int dim = 2) { return AffineMap(Mat2::Identity(), t, dim); }

  const Mat2& linear() const { return a_; }
  const Point& offset() const { return b_; }
  int dim() const { return dim_; }
  double det() const { return det_dim(a_, dim_); }

  Point operator()(const Point& x) const { return a_ * x + b_; }

  AffineMap inverse() const {
    const Mat2 ai = a_.inverse();
    return AffineMap(ai, -ai * b_, dim_);
  }

  /// (this ∘ inner)(x) = this(inner(x)).
  AffineMap compose(const AffineMap& inner) const {
    return AffineMap(a_ * inner.a_, a_ * inner.b_ + b_, dim_);
  }

 private:
  Mat2 a_;
  Point b_;
  int dim_;
};

}  // namespace lmo
