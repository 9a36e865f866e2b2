#pragma once

#include "lmo/core/error.hpp"

#include <cmath>

namespace lmo {

/// Pinching constants 0 < lambda <= Lambda < inf for a density.
struct EllipticityBounds {
  double lambda = 1.0;
  double Lambda = 1.0;

  EllipticityBounds() = default;
  EllipticityBounds(double lo, double hi) : lambda(lo), Lambda(hi) {
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) {
      throw InvalidInput("ellipticity bounds need 0 < lambda <= Lambda < inf");
    }
  }
};

}  // namespace lmo
