#pragma once

#include "lmo/core/linalg.hpp"
#include "lmo/geometry/scalar_field.hpp"

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

namespace lmo {

struct Polyline {
  std::vector<Point> points;
  bool closed = false;
};

/// How a crossing is located along a cell edge.
enum class EdgeRoot {
  kLinear,  // linear interpolation of the two end values
  kCubic,   // root of the cubic through four collinear nodes (exact on cubics)
};

namespace detail {

// Root in [0,1] of the cubic Lagrange interpolant through values at -1,0,1,2
// (already shifted by the level), seeded by the linear guess.
inline double cubic_edge_root(const std::array<double, 4>& v) {
  auto eval = [&](double t) {
    return -t * (t - 1) * (t - 2) / 6.0 * v[0] + (t + 1) * (t - 1) * (t - 2) / 2.0 * v[1] -
           (t + 1) * t * (t - 2) / 2.0 * v[2] + (t + 1) * t * (t - 1) / 6.0 * v[3];
  };
  double lo = 0.0;
  double hi = 1.0;
  double flo = v[1];
  if (flo == 0.0) return 0.0;
  if (v[2] == 0.0) return 1.0;
  for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = eval(mid);
    if ((fm <= 0.0) == (flo <= 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Marching-squares level set {f = level} of a 2D field. Nodes with
/// f <= level count as inside. Cells with a non-finite corner are skipped.
/// Ambiguous saddles are resolved by the average of the four corners.
/// Segments are chained into polylines; curves through skipped cells stay open.
inline std::vector<Polyline> contour_lines(const ScalarField& f, double level, EdgeRoot root = EdgeRoot::kLinear) {
  const Grid& g = f.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  auto val = [&](int i, int j) { return f.usable(i, j) ? f.at(i, j) - level : std::numeric_limits<double>::quiet_NaN(); };

  // Edge key: 2*node for the edge to the right, 2*node+1 for the edge upward.
  std::map<long, Point> crossing;
  auto edge_point = [&](int i, int j, bool vertical) -> Point {
    const long key = 2L * static_cast<long>(g.index(i, j)) + (vertical ? 1 : 0);
    if (auto it = crossing.find(key); it != crossing.end()) return it->second;
    const int di = vertical ? 0 : 1;
    const int dj = vertical ? 1 : 0;
    const double a = val(i, j);
    const double b = val(i + di, j + dj);
    double t = a / (a - b);
    if (root == EdgeRoot::kCubic) {
      const std::array<double, 4> v{val(i - di, j - dj), a, b, val(i + 2 * di, j + 2 * dj)};
      if (std::isfinite(v[0]) && std::isfinite(v[3])) t = detail::cubic_edge_root(v);
    }
    const Point p = g.point(i, j) + t * g.spacing() * Point(di, dj);
    crossing.emplace(key, p);
    return p;
  };
  auto edge_key = [&](int i, int j, bool vertical) { return 2L * static_cast<long>(g.index(i, j)) + (vertical ? 1 : 0); };

  struct Segment {
    long a, b;
  };
  std::vector<Segment> segs;
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const double c0 = val(i, j);
      const double c1 = val(i + 1, j);
      const double c2 = val(i + 1, j + 1);
      const double c3 = val(i, j + 1);
      if (!std::isfinite(c0) || !std::isfinite(c1) || !std::isfinite(c2) || !std::isfinite(c3)) continue;
      const int mask = (c0 <= 0) | ((c1 <= 0) << 1) | ((c2 <= 0) << 2) | ((c3 <= 0) << 3);
      if (mask == 0 || mask == 15) continue;
      // Edges: 0 bottom, 1 right, 2 top, 3 left.
      const long e[4] = {edge_key(i, j, false), edge_key(i + 1, j, true), edge_key(i, j + 1, false),
                         edge_key(i, j, true)};
      const std::array<std::array<int, 2>, 4> where{{{i, j}, {i + 1, j}, {i, j + 1}, {i, j}}};
      const bool vert[4] = {false, true, false, true};
      auto touch = [&](int k) { edge_point(where[k][0], where[k][1], vert[k]); };
      auto add = [&](int p, int q) {
        touch(p);
        touch(q);
        segs.push_back({e[p], e[q]});
      };
      const bool center_inside = 0.25 * (c0 + c1 + c2 + c3) <= 0;
      switch (mask) {
        case 1: case 14: add(3, 0); break;
        case 2: case 13: add(0, 1); break;
        case 3: case 12: add(3, 1); break;
        case 4: case 11: add(1, 2); break;
        case 6: case 9: add(0, 2); break;
        case 7: case 8: add(3, 2); break;
        case 5:
          if (center_inside) { add(3, 2); add(0, 1); } else { add(3, 0); add(1, 2); }
          break;
        case 10:
          if (center_inside) { add(3, 0); add(1, 2); } else { add(0, 1); add(3, 2); }
          break;
        default: break;
      }
    }
  }

  std::map<long, std::vector<std::size_t>> incident;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    incident[segs[s].a].push_back(s);
    incident[segs[s].b].push_back(s);
  }
  std::vector<bool> used(segs.size(), false);
  auto walk = [&](std::size_t start, long from, std::vector<long>& keys) {
    std::size_t s = start;
    long at = from;
    keys.push_back(at);
    while (true) {
      used[s] = true;
      const long next = segs[s].a == at ? segs[s].b : segs[s].a;
      keys.push_back(next);
      std::optional<std::size_t> cont;
      for (std::size_t t : incident[next]) {
        if (!used[t]) {
          cont = t;
          break;
        }
      }
      if (!cont) break;
      s = *cont;
      at = next;
    }
  };

  std::vector<Polyline> out;
  // Open chains first start from ends (keys with a single incident segment).
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t s = 0; s < segs.size(); ++s) {
      if (used[s]) continue;
      long start_key = segs[s].a;
      if (pass == 0) {
        if (incident[segs[s].a].size() == 1) start_key = segs[s].a;
        else if (incident[segs[s].b].size() == 1) start_key = segs[s].b;
        else continue;
      }
      std::vector<long> keys;
      walk(s, start_key, keys);
      Polyline pl;
      pl.closed = pass == 1 && keys.size() > 2 && keys.front() == keys.back();
      if (pl.closed) keys.pop_back();
      for (long k : keys) pl.points.push_back(crossing.at(k));
      out.push_back(std::move(pl));
    }
  }
  return out;
}

/// Sign-change crossings of a 1D field at `level`, left to right.
inline std::vector<Point> level_crossings_1d(const ScalarField& f, double level, EdgeRoot root = EdgeRoot::kLinear) {
  const Grid& g = f.grid();
  std::vector<Point> out;
  for (int i = 0; i + 1 < g.nx(); ++i) {
    if (!f.usable(i, 0) || !f.usable(i + 1, 0)) continue;
    const double a = f.at(i, 0) - level;
    const double b = f.at(i + 1, 0) - level;
    if ((a <= 0) == (b <= 0)) continue;
    double t = a / (a - b);
    if (root == EdgeRoot::kCubic && f.usable(i - 1, 0) && f.usable(i + 2, 0)) {
      t = detail::cubic_edge_root({f.at(i - 1, 0) - level, a, b, f.at(i + 2, 0) - level});
    }
    out.emplace_back(g.point(i, 0).x() + t * g.spacing(), 0.0);
  }
  return out;
}

/// All contour vertices, flattened (1D: the crossings).
inline std::vector<Point> contour_points(const ScalarField& f, double level, EdgeRoot root = EdgeRoot::kLinear) {
  if (f.grid().dim() == 1) return level_crossings_1d(f, level, root);
  std::vector<Point> pts;
  for (const auto& pl : contour_lines(f, level, root)) pts.insert(pts.end(), pl.points.begin(), pl.points.end());
  return pts;
}

}  // namespace lmo
