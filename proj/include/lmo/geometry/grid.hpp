#pragma once

#include "lmo/core/error.hpp"
#include "lmo/core/linalg.hpp"
#include "lmo/geometry/domain.hpp"

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

namespace lmo {

enum class NodeTag : std::uint8_t { kExterior = 0, kInterior = 1, kBoundary = 2 };

inline std::string_view to_string(NodeTag t) {
  switch (t) {
    case NodeTag::kInterior: return "interior";
    case NodeTag::kBoundary: return "boundary";
    default: return "exterior";
  }
}

/// Integer lattice direction.
struct Offset {
  int dx = 0;
  int dy = 0;

  double norm() const { return std::hypot(static_cast<double>(dx), static_cast<double>(dy)); }
  Point vec() const { return Point(dx, dy); }
  friend bool operator==(const Offset&, const Offset&) = default;
};

/// Uniform lattice `origin + spacing * (i, j)` with a per-node tag.
///
/// Interior nodes lie strictly inside the domain; boundary nodes form the
/// one-cell band around them; everything else is exterior. Every interior
/// node has its eight lattice neighbours tagged interior or boundary. One
/// dimensional grids have `ny == 1` and only x-neighbours.
class Grid {
 public:
  Grid(Point origin, double spacing, int nx, int ny, int dim, std::vector<NodeTag> tags,
       std::shared_ptr<const ConvexDomain> domain = nullptr)
      : origin_(origin),
        spacing_(spacing),
        nx_(nx),
        ny_(ny),
        dim_(dim),
        tags_(std::move(tags)),
        domain_(std::move(domain)) {
    if (!(spacing_ > 0.0) || nx_ < 1 || ny_ < 1) throw InvalidInput("grid needs positive spacing and shape");
    if (dim_ == 1 && ny_ != 1) throw InvalidInput("one-dimensional grid must have ny == 1");
    if (tags_.size() != size()) throw InvalidInput("tag count does not match grid shape");
    enforce_band();
  }

  /// Lattice covering `domain` with one extra cell on every side.
  static std::shared_ptr<const Grid> covering(const ConvexDomain& domain, double spacing) {
    const auto [lo, hi] = domain.bounds();
    const int dim = domain.dimension();
    const int nx = static_cast<int>(std::ceil((hi.x() - lo.x()) / spacing - 1e-9)) + 3;
    const int ny = dim == 1 ? 1 : static_cast<int>(std::ceil((hi.y() - lo.y()) / spacing - 1e-9)) + 3;
    const Point origin = dim == 1 ? Point(lo.x() - spacing, 0.0) : Point(lo.x() - spacing, lo.y() - spacing);
    auto shared = std::make_shared<const ConvexDomain>(domain);
    std::vector<NodeTag> tags(static_cast<std::size_t>(nx) * ny, NodeTag::kExterior);
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const Point p = origin + spacing * Point(i, dim == 1 ? 0 : j);
        if (domain.signed_distance(p) < -interior_margin() * spacing) tags[j * nx + i] = NodeTag::kInterior;
      }
    }
    mark_band(tags, nx, ny, dim);
    return std::make_shared<const Grid>(origin, spacing, nx, ny, dim, std::move(tags), std::move(shared));
  }

  /// Nodes closer to the boundary than this fraction of a cell are not interior.
  static constexpr double interior_margin() { return 1e-6; }

  const Point& origin() const { return origin_; }
  double spacing() const { return spacing_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int dim() const { return dim_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
  const std::vector<NodeTag>& tags() const { return tags_; }
  NodeTag tag(std::size_t idx) const { return tags_[idx]; }
  bool is_interior(std::size_t idx) const { return tags_[idx] == NodeTag::kInterior; }
  bool is_active(std::size_t idx) const { return tags_[idx] != NodeTag::kExterior; }
  const ConvexDomain* domain() const { return domain_.get(); }
  std::shared_ptr<const ConvexDomain> domain_ptr() const { return domain_; }

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }
  int ix(std::size_t idx) const { return static_cast<int>(idx % nx_); }
  int iy(std::size_t idx) const { return static_cast<int>(idx / nx_); }
  bool in_range(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < ny_; }
  Point point(int i, int j) const { return origin_ + spacing_ * Point(i, j); }
  Point point(std::size_t idx) const { return point(ix(idx), iy(idx)); }

  std::optional<std::size_t> neighbor(std::size_t idx, Offset o) const {
    const int i = ix(idx) + o.dx;
    const int j = iy(idx) + o.dy;
    if (!in_range(i, j)) return std::nullopt;
    return index(i, j);
  }

  /// Lattice coordinates of `p` (fractional).
  Point lattice_coords(const Point& p) const { return (p - origin_) / spacing_; }

  std::size_t count(NodeTag t) const {
    std::size_t c = 0;
    for (NodeTag x : tags_) c += (x == t);
    return c;
  }

  /// Unit neighbour offsets for this dimension (8-neighbourhood in 2D).
  std::vector<Offset> unit_offsets() const {
    if (dim_ == 1) return {{1, 0}, {-1, 0}};
    return {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}};
  }

  /// Same geometry, different tags.
  std::shared_ptr<const Grid> with_tags(std::vector<NodeTag> tags) const {
    return std::make_shared<const Grid>(origin_, spacing_, nx_, ny_, dim_, std::move(tags), domain_);
  }

  bool same_lattice(const Grid& o) const {
    return nx_ == o.nx_ && ny_ == o.ny_ && dim_ == o.dim_ && spacing_ == o.spacing_ && origin_ == o.origin_;
  }

  /// Adds the one-cell band around interior nodes as boundary tags.
  static void mark_band(std::vector<NodeTag>& tags, int nx, int ny, int dim) {
    std::vector<NodeTag> out = tags;
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        if (tags[j * nx + i] != NodeTag::kInterior) continue;
        for (int dj = (dim == 1 ? 0 : -1); dj <= (dim == 1 ? 0 : 1); ++dj) {
          for (int di = -1; di <= 1; ++di) {
            const int a = i + di;
            const int b = j + dj;
            if (a < 0 || b < 0 || a >= nx || b >= ny) continue;
            if (out[b * nx + a] == NodeTag::kExterior) out[b * nx + a] = NodeTag::kBoundary;
          }
        }
      }
    }
    tags = std::move(out);
  }

 private:
  // Demotes interior nodes that would violate the band invariant.
  void enforce_band() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t idx = 0; idx < tags_.size(); ++idx) {
        if (tags_[idx] != NodeTag::kInterior) continue;
        for (Offset o : unit_offsets()) {
          const auto n = neighbor(idx, o);
          if (!n || tags_[*n] == NodeTag::kExterior) {
            tags_[idx] = NodeTag::kBoundary;
            changed = true;
            break;
          }
        }
      }
    }
  }

  Point origin_;
  double spacing_;
  int nx_;
  int ny_;
  int dim_;
  std::vector<NodeTag> tags_;
  std::shared_ptr<const ConvexDomain> domain_;
};

using GridPtr = std::shared_ptr<const Grid>;

}  // namespace lmo
