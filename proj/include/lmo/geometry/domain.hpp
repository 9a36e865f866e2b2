#pragma once

#include "lmo/core/error.hpp"
#include "lmo/core/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace lmo {

/// A bounded convex domain: a counterclockwise convex polygon, a disk, or
/// (dimension 1) an interval stored as a ball on the x-axis.
class ConvexDomain {
 public:
  enum class Kind { kBall, kPolygon };

  static ConvexDomain ball(const Point& center, double radius, int dim = 2) {
    if (!(radius > 0.0)) throw DegenerateInput("ball radius must be positive");
    if (dim != 1 && dim != 2) throw InvalidInput("dimension must be 1 or 2");
    ConvexDomain d;
    d.kind_ = Kind::kBall;
    d.dim_ = dim;
    d.center_ = dim == 1 ? Point(center.x(), 0.0) : center;
    d.radius_ = radius;
    return d;
  }

  static ConvexDomain interval(double a, double b) {
    if (!(b > a)) throw DegenerateInput("interval must have positive length");
    return ball(Point(0.5 * (a + b), 0.0), 0.5 * (b - a), 1);
  }

  static ConvexDomain polygon(std::vector<Point> vertices) {
    const std::size_t n = vertices.size();
    if (n < 3) throw DegenerateInput("polygon needs at least three vertices");
    double area2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Point& a = vertices[i];
      const Point& b = vertices[(i + 1) % n];
      const Point& c = vertices[(i + 2) % n];
      const double cross = (b - a).x() * (c - b).y() - (b - a).y() * (c - b).x();
      if (cross < -1e-12 * ((b - a).norm() * (c - b).norm() + 1e-300)) {
        throw InvalidInput("polygon vertices must be convex and counterclockwise");
      }
      area2 += a.x() * b.y() - b.x() * a.y();
    }
    if (!(area2 > 0.0)) throw DegenerateInput("polygon has empty interior");
    ConvexDomain d;
    d.kind_ = Kind::kPolygon;
    d.dim_ = 2;
    d.vertices_ = std::move(vertices);
    return d;
  }

  Kind kind() const { return kind_; }
  int dimension() const { return dim_; }
  const Point& center() const { return center_; }
  double radius() const { return radius_; }
  const std::vector<Point>& vertices() const { return vertices_; }

  /// Signed distance, negative inside. Exact for disks, intervals and convex polygons.
  double signed_distance(const Point& p) const {
    if (kind_ == Kind::kBall) {
      if (dim_ == 1) return std::abs(p.x() - center_.x()) - radius_;
      return (p - center_).norm() - radius_;
    }
    const std::size_t n = vertices_.size();
    double max_line = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& a = vertices_[i];
      const Point e = vertices_[(i + 1) % n] - a;
      const Point normal = Point(e.y(), -e.x()).normalized();
      max_line = std::max(max_line, normal.dot(p - a));
    }
    if (max_line <= 0.0) return max_line;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& a = vertices_[i];
      const Point e = vertices_[(i + 1) % n] - a;
      const double t = std::clamp(e.dot(p - a) / e.squaredNorm(), 0.0, 1.0);
      best = std::min(best, (a + t * e - p).norm());
    }
    return best;
  }

  bool contains(const Point& p, double slack = 0.0) const { return signed_distance(p) <= slack; }

  /// Distance t >= 0 travelled from `from` (inside) along unit `dir` until the
  /// boundary is reached.
  double exit_distance(const Point& from, const Point& dir) const {
    if (kind_ == Kind::kBall) {
      if (dim_ == 1) {
        const double dx = dir.x();
        if (dx > 0) return (center_.x() + radius_ - from.x()) / dx;
        if (dx < 0) return (center_.x() - radius_ - from.x()) / dx;
        return std::numeric_limits<double>::infinity();
      }
      const Point q = from - center_;
      const double b = q.dot(dir);
      const double c = q.squaredNorm() - radius_ * radius_;
      return -b + std::sqrt(std::max(b * b - c, 0.0));
    }
    double t = std::numeric_limits<double>::infinity();
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& a = vertices_[i];
      const Point e = vertices_[(i + 1) % n] - a;
      const Point normal(e.y(), -e.x());
      const double nd = normal.dot(dir);
      if (nd > 0) t = std::min(t, normal.dot(a - from) / nd);
    }
    return std::max(t, 0.0);
  }

  /// Axis-aligned bounding box as (lo, hi).
  std::pair<Point, Point> bounds() const {
    if (kind_ == Kind::kBall) {
      const Point r = dim_ == 1 ? Point(radius_, 0.0) : Point(radius_, radius_);
      return {center_ - r, center_ + r};
    }
    Point lo = vertices_.front();
    Point hi = vertices_.front();
    for (const Point& v : vertices_) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    return {lo, hi};
  }

  /// Points on the boundary; polygon edges are subdivided evenly.
  std::vector<Point> boundary_samples(int count) const {
    std::vector<Point> out;
    if (kind_ == Kind::kBall) {
      if (dim_ == 1) return {center_ - Point(radius_, 0), center_ + Point(radius_, 0)};
      out.reserve(count);
      for (int k = 0; k < count; ++k) {
        const double t = 2.0 * std::numbers::pi * k / count;
        out.push_back(center_ + radius_ * Point(std::cos(t), std::sin(t)));
      }
      return out;
    }
    const std::size_t n = vertices_.size();
    const int per_edge = std::max(1, count / static_cast<int>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const Point& a = vertices_[i];
      const Point& b = vertices_[(i + 1) % n];
      for (int k = 0; k < per_edge; ++k) out.push_back(a + (b - a) * (static_cast<double>(k) / per_edge));
    }
    return out;
  }

  double measure() const {
    if (kind_ == Kind::kBall) return dim_ == 1 ? 2 * radius_ : std::numbers::pi * radius_ * radius_;
    double area2 = 0.0;
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      const Point& a = vertices_[i];
      const Point& b = vertices_[(i + 1) % vertices_.size()];
      area2 += a.x() * b.y() - b.x() * a.y();
    }
    return 0.5 * area2;
  }

 private:
  ConvexDomain() = default;

  Kind kind_ = Kind::kBall;
  int dim_ = 2;
  Point center_ = Point::Zero();
  double radius_ = 1.0;
  std::vector<Point> vertices_;
};

/// Convex hull (Andrew's monotone chain), counterclockwise, collinear points dropped.
inline std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Point& o, const Point& a, const Point& b) {
    return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
  };
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace lmo
