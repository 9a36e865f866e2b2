#include "lmo/ma/radial.hpp"
#include "lmo/ma/solver.hpp"

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace lmo {
namespace {

MAProblem make_problem(const ConvexDomain& d, const GridPtr& g, const std::function<double(const Point&)>& f, double lo,
                       double hi) {
  return MAProblem{d, ScalarField::from_function(g, f), EllipticityBounds(lo, hi)};
}

double max_error(const ScalarField& w, const std::function<double(const Point&)>& exact) {
  double e = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w.grid().is_interior(i)) e = std::max(e, std::abs(w[i] - exact(w.grid().point(i))));
  }
  return e;
}

using oracle::ma_radial_density_solution;

TEST(SolveMa, ConstantDensityOnDiskIsParaboloid) {
  const auto d = ConvexDomain::ball(Point::Zero(), 1.0);
  const auto g = Grid::covering(d, 1.0 / 64);
  const auto sol = solve_ma(make_problem(d, g, [](const Point&) { return 1.0; }, 1, 1), g);
  EXPECT_LE(max_error(sol.w, [](const Point& p) { return 0.5 * (p.squaredNorm() - 1); }), 5e-3);
  EXPECT_LE(sol.max_residual, 1e-8);
  EXPECT_GE(sol.convexity_margin, -1e-10);
}

TEST(SolveMa, OneDimensionalIsSecondIntegral) {
  const auto d = ConvexDomain::interval(-1, 1);
  const auto g = Grid::covering(d, 1.0 / 64);
  const auto sol = solve_ma(make_problem(d, g, [](const Point&) { return 2.0; }, 2, 2), g);
  EXPECT_LE(max_error(sol.w, [](const Point& p) { return p.x() * p.x() - 1; }), 1e-10);
}

TEST(SolveMa, RadialDensityMatchesOracle) {
  const auto d = ConvexDomain::ball(Point::Zero(), 1.0);
  const auto g = Grid::covering(d, 1.0 / 64);
  const auto sol = solve_ma(make_problem(d, g, [](const Point& p) { return 1 + p.squaredNorm(); }, 1, 2), g);
  EXPECT_LE(max_error(sol.w, [](const Point& p) { return ma_radial_density_solution(p.norm()); }), 1e-2);
  EXPECT_GE(sol.convexity_margin, -1e-8);
}

TEST(SolveMa, BandValuesAreExtrapolatedExactlyForQuadratics) {
  const auto d = ConvexDomain::ball(Point::Zero(), 1.0);
  const auto g = Grid::covering(d, 1.0 / 32);
  const auto sol = solve_ma(make_problem(d, g, [](const Point&) { return 1.0; }, 1, 1), g);
  for (std::size_t i = 0; i < g->size(); ++i) {
    if (g->is_active(i)) EXPECT_NEAR(sol.w[i], 0.5 * (g->point(i).squaredNorm() - 1), 1e-9);
  }
}

TEST(SolveMa, ComparisonInDensity) {
  const auto d = ConvexDomain::ball(Point::Zero(), 1.0);
  const auto g = Grid::covering(d, 1.0 / 32);
  const auto w1 = solve_ma(make_problem(d, g, [](const Point& p) { return 1.5 + p.x() * p.x(); }, 1, 3), g).w;
  const auto w2 = solve_ma(make_problem(d, g, [](const Point&) { return 1.0; }, 1, 3), g).w;
  for (std::size_t i = 0; i < g->size(); ++i) {
    if (g->is_interior(i)) EXPECT_LE(w1[i], w2[i] + 1e-9);
  }
}

TEST(SolveMa, DiagonalAffineCovariance) {
  // w(x) = (|x|^2 - 1)/2 on B_1 transported by T = diag(2, 1/2) solves
  // det D^2 w~ = 1 on the ellipse T(B_1).
  std::vector<Point> ellipse;
  for (int k = 0; k < 400; ++k) {
    const double t = 2 * std::numbers::pi * k / 400;
    ellipse.emplace_back(2 * std::cos(t), 0.5 * std::sin(t));
  }
  const auto d = ConvexDomain::polygon(ellipse);
  const auto g = Grid::covering(d, 1.0 / 32);
  const auto sol = solve_ma(make_problem(d, g, [](const Point&) { return 1.0; }, 1, 1), g);
  // The inscribed polygon is slightly smaller than the ellipse; compare
  // with the quadratic vanishing on the polygon's vertex ring.
  EXPECT_LE(max_error(sol.w, [](const Point& p) { return 0.5 * (p.x() * p.x() / 4 + 4 * p.y() * p.y() - 1); }),
            1e-3);
}

TEST(SolveMa, RejectsDensityOutsideBounds) {
  const auto d = ConvexDomain::ball(Point::Zero(), 1.0);
  const auto g = Grid::covering(d, 1.0 / 8);
  EXPECT_THROW(solve_ma(make_problem(d, g, [](const Point&) { return 3.0; }, 1, 2), g), InvalidInput);
}

TEST(SolveMa, ReportsNoConvergenceWhenStepsRunOut) {
  const auto d = ConvexDomain::ball(Point::Zero(), 1.0);
  const auto g = Grid::covering(d, 1.0 / 16);
  MASolverParams p;
  p.max_newton = 0;
  try {
    solve_ma(make_problem(d, g, [](const Point& x) { return 1 + x.squaredNorm(); }, 1, 2), g, p);
    FAIL() << "expected NoConvergence";
  } catch (const NoConvergence& e) {
    EXPECT_GT(e.last_residual(), 0.0);
  }
}

TEST(RadialOracle, ClosedForms) {
  const auto a = radial_ma_oracle([](double) { return 1.0; }, 1.0, 2);
  const auto b = radial_ma_oracle([](double) { return 4.0; }, 1.0, 2);
  const auto c = radial_ma_oracle([](double r) { return 1 + r * r; }, 1.0, 2);
  for (double r : {0.0, 0.1, 0.37, 0.5, 0.99, 1.0}) {
    EXPECT_NEAR(a.value(r), 0.5 * (r * r - 1), 1e-12);
    EXPECT_NEAR(b.value(r), r * r - 1, 1e-12);
    EXPECT_NEAR(c.value(r), ma_radial_density_solution(r), 1e-10);
    EXPECT_NEAR(c.slope(r), r * std::sqrt(1 + r * r / 2), 1e-10);
  }
}

TEST(VerifyMaResidual, ExactQuadraticHasZeroResidual) {
  const auto g = Grid::covering(ConvexDomain::ball(Point::Zero(), 1.0), 1.0 / 16);
  const auto w = ScalarField::from_function(g, [](const Point& p) { return 0.5 * p.squaredNorm(); });
  const auto f = ScalarField::from_function(g, [](const Point&) { return 1.0; });
  const auto s = verify_ma_residual(w, f);
  EXPECT_LE(s.max_residual, 1e-12);
  EXPECT_NEAR(s.convexity_margin, 1.0, 1e-12);
}

TEST(VerifyMaResidual, QuarticConvergesAtSecondOrder) {
  std::vector<double> hs{1.0 / 16, 1.0 / 32, 1.0 / 64};
  std::vector<double> res;
  for (double h : hs) {
    const auto g = Grid::covering(ConvexDomain::ball(Point::Zero(), 1.0), h);
    const auto w = ScalarField::from_function(g, [](const Point& p) { return std::pow(p.squaredNorm(), 2); });
    const auto f = ScalarField::from_function(g, [](const Point& p) { return 48 * std::pow(p.squaredNorm(), 2); });
    res.push_back(verify_ma_residual(w, f).max_residual);
  }
  for (std::size_t i = 0; i + 1 < res.size(); ++i) {
    const double slope = std::log(res[i] / res[i + 1]) / std::log(hs[i] / hs[i + 1]);
    EXPECT_NEAR(slope, 2.0, 0.2);
  }
}

TEST(VerifyMaResidual, ConcaveFieldHasNegativeMargin) {
  const auto g = Grid::covering(ConvexDomain::ball(Point::Zero(), 1.0), 1.0 / 16);
  const auto w = ScalarField::from_function(g, [](const Point& p) { return -p.squaredNorm(); });
  const auto f = ScalarField::from_function(g, [](const Point&) { return 1.0; });
  EXPECT_LT(verify_ma_residual(w, f).convexity_margin, 0.0);
}

}  // namespace
}  // namespace lmo
