#pragma once

#include "lmo/core/error.hpp"
#include "lmo/geometry/affine.hpp"
#include "lmo/geometry/grid.hpp"
#include "lmo/geometry/scalar_field.hpp"

#include <limits>
#include <vector>

namespace lmo {

enum class Interpolation { kBilinear, kCubic };

/// Resamples `field` under T: output(y) = field(T^{-1} y).
///
/// Target nodes whose preimage leaves the usable part of the source grid
/// become exterior; interior target nodes next to them are demoted to
/// boundary so the band invariant holds on the returned grid.
inline ScalarField apply_affine(const AffineMap& t, const ScalarField& field, const Grid& target,
                                Interpolation interp = Interpolation::kBilinear) {
  const AffineMap inv = t.inverse();
  std::vector<NodeTag> tags(target.size(), NodeTag::kExterior);
  std::vector<double> values(target.size(), std::numeric_limits<double>::quiet_NaN());
  std::size_t hits = 0;
  for (std::size_t idx = 0; idx < target.size(); ++idx) {
    if (!target.is_active(idx)) continue;
    const Point x = inv(target.point(idx));
    const auto v = interp == Interpolation::kCubic ? field.cubic(x) : field.bilinear(x);
    if (!v) continue;
    values[idx] = *v;
    tags[idx] = target.tag(idx);
    ++hits;
  }
  if (hits == 0) throw EmptyImage("no target node has a preimage inside the source field");
  auto grid = std::make_shared<const Grid>(target.origin(), target.spacing(), target.nx(), target.ny(), target.dim(),
                                           std::move(tags), target.domain_ptr());
  return ScalarField(std::move(grid), std::move(values));
}

}  // namespace lmo
