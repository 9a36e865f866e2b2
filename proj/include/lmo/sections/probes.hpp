#pragma once

#include "lmo/core/error.hpp"
#include "lmo/core/fit.hpp"
#include "lmo/linma/stencil.hpp"
#include "lmo/linma/tensor_field.hpp"
#include "lmo/sections/section.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace lmo {

struct SectionRadii {
  double height;
  double inradius;
  double circumradius;
};

/// Radii of S_h(x0) across heights and the fitted constants of
/// B_{C1 h} ⊂ S_h ⊂ B_{C2 h^sigma}.
struct SectionProbeResult {
  std::vector<SectionRadii> records;
  double sigma = 0.0;       // log-log slope of the circumradius
  double sigma_rms = 0.0;   // residual of that fit
  double sigma_in = 0.0;    // log-log slope of the inradius (reported)
  double c1 = 0.0;          // min over heights of r_in / h
  double c2 = 0.0;          // max over heights of r_out / h^sigma
  double c2_spread = 0.0;   // max/min of r_out / h^sigma across heights
  double c1_spread = 0.0;   // max/min of r_in / h^sigma_in across heights
  bool inclusions_hold = true;  // checked on node sets, not on the radii
};

/// Measures section radii at each height and checks both inclusions on the
/// grid nodes: every node within C1 h of x0 belongs to S_h, and every
/// section node lies within C2 h^sigma of x0 (one cell of slack on each).
inline SectionProbeResult section_ball_probe(const ScalarField& w, const Point& x0, const std::vector<double>& heights) {
  if (heights.size() < 2) throw InvalidInput("section probe needs at least two heights");
  SectionProbeResult r;
  std::vector<Section> secs;
  std::vector<double> hs, rin, rout;
  for (double h : heights) {
    secs.push_back(extract_section(w, x0, h));
    const Section& s = secs.back();
    r.records.push_back({h, s.inradius, s.circumradius});
    hs.push_back(h);
    rin.push_back(s.inradius);
    rout.push_back(s.circumradius);
  }
  const LineFit fo = fit_loglog(hs, rout);
  const LineFit fi = fit_loglog(hs, rin);
  r.sigma = fo.slope;
  r.sigma_rms = fo.rms;
  r.sigma_in = fi.slope;
  r.c1 = std::numeric_limits<double>::infinity();
  double c2min = std::numeric_limits<double>::infinity();
  double c1lo = std::numeric_limits<double>::infinity(), c1hi = 0.0;
  for (const auto& rec : r.records) {
    r.c1 = std::min(r.c1, rec.inradius / rec.height);
    const double c2h = rec.circumradius / std::pow(rec.height, r.sigma);
    r.c2 = std::max(r.c2, c2h);
    c2min = std::min(c2min, c2h);
    const double c1h = rec.inradius / std::pow(rec.height, r.sigma_in);
    c1lo = std::min(c1lo, c1h);
    c1hi = std::max(c1hi, c1h);
  }
  r.c2_spread = r.c2 / c2min;
  r.c1_spread = c1hi / c1lo;

  const Grid& g = w.grid();
  const double cell = g.spacing();
  for (std::size_t k = 0; k < secs.size(); ++k) {
    const Section& s = secs[k];
    const double inner = r.c1 * heights[k];
    const double outer = r.c2 * std::pow(heights[k], r.sigma);
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
      if (!g.is_active(idx)) continue;
      const double d = (g.point(idx) - s.center).norm();
      if (d <= inner - cell && !s.contains_node(idx)) r.inclusions_hold = false;
      if (s.contains_node(idx) && d > outer + cell) r.inclusions_hold = false;
    }
  }
  return r;
}

/// Positive boundary data g = exp(sum_m a_m cos(m t) + b_m sin(m t)) with t
/// the polar angle about a center and coefficients uniform in
/// [-amplitude, amplitude].
struct LogTrigData {
  Point center = Point::Zero();
  std::vector<double> a;
  std::vector<double> b;

  static LogTrigData random(std::mt19937_64& rng, const Point& center, int modes = 3, double amplitude = 0.5) {
    std::uniform_real_distribution<double> u(-amplitude, amplitude);
    LogTrigData d;
    d.center = center;
    for (int m = 0; m < modes; ++m) {
      d.a.push_back(u(rng));
      d.b.push_back(u(rng));
    }
    return d;
  }

  double operator()(const Point& p) const {
    const Point d = p - center;
    const double t = std::atan2(d.y(), d.x());
    double e = 0.0;
    for (std::size_t m = 0; m < a.size(); ++m) {
      e += a[m] * std::cos((m + 1.0) * t) + b[m] * std::sin((m + 1.0) * t);
    }
    return std::exp(e);
  }
};

struct HarnackResult {
  double quotient = 1.0;  // sup v / inf v over the nodes of S_h
  double sup = 0.0;
  double inf = 0.0;
  std::size_t unknowns = 0;
};

/// Solves L_h v = 0 on the nodes of S_{2h}(x0) with v = g on the
/// surrounding lattice band (lattice second differences, monotone
/// decomposition of W) and returns sup/inf of v over the nodes of S_h(x0).
inline HarnackResult harnack_quotient(const TensorField& w_cof, const ScalarField& w, const Point& x0, double h,
                                      const std::function<double(const Point&)>& boundary_data, int width = 1) {
  if (!w_cof.grid().same_lattice(w.grid())) throw InvalidInput("cofactor field and potential lattices differ");
  const Section outer = extract_section(w, x0, 2 * h);
  const Section inner = extract_section(w, x0, h);
  const Grid& g = w.grid();
  std::vector<NodeTag> tags(g.size(), NodeTag::kExterior);
  for (std::size_t idx : outer.nodes) tags[idx] = NodeTag::kInterior;
  Grid::mark_band(tags, g.nx(), g.ny(), g.dim());
  const GridPtr sg = g.with_tags(std::move(tags));
  for (std::size_t idx = 0; idx < sg->size(); ++idx) {
    if (sg->is_active(idx) && !sg->is_interior(idx) && !(boundary_data(sg->point(idx)) > 0.0)) {
      throw InvalidInput("Harnack boundary data must be positive");
    }
  }
  AssemblyOptions opt;
  opt.mode = BoundaryMode::kLattice;
  opt.width = width;
  const LinearOperator op = assemble_operator(w_cof, sg, boundary_data, opt);
  Eigen::SparseMatrix<double> a = op.a;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw NonMonotoneStencil("Harnack system is singular");
  const Eigen::VectorXd v = lu.solve(-op.b);
  if (!(v.minCoeff() > 0.0)) throw NonMonotoneStencil("discrete L_w-harmonic function is not positive");
  HarnackResult r;
  r.unknowns = static_cast<std::size_t>(op.unknowns());
  r.sup = -std::numeric_limits<double>::infinity();
  r.inf = std::numeric_limits<double>::infinity();
  for (std::size_t idx : inner.nodes) {
    const int k = op.unknown[idx];
    if (k < 0) continue;
    r.sup = std::max(r.sup, v(k));
    r.inf = std::min(r.inf, v(k));
  }
  r.quotient = r.sup / r.inf;
  return r;
}

}  // namespace lmo
