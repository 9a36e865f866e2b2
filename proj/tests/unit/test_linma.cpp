#include "lmo/linma/operator.hpp"
#include "lmo/linma/stencil.hpp"
#include "lmo/linma/tensor_field.hpp"
#include "lmo/ma/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace lmo {
namespace {

GridPtr disk_grid(double h) { return Grid::covering(ConvexDomain::ball(Point::Zero(), 1.0), h); }

Mat2 mat(double a, double b, double c) {
  Mat2 m;
  m << a, b, b, c;
  return m;
}

double max_abs_over_valid(const ScalarField& f, const std::function<double(const Point&)>& exact) {
  double e = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (std::isfinite(f[i])) e = std::max(e, std::abs(f[i] - exact(f.grid().point(i))));
  }
  return e;
}

TEST(DiscreteHessian, IdentityForIsotropicQuadratic) {
  const auto g = disk_grid(1.0 / 16);
  const auto h = discrete_hessian(ScalarField::from_function(g, [](const Point& p) { return 0.5 * p.squaredNorm(); }));
  ASSERT_GT(h.valid_count(), 0u);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!h.valid(i)) continue;
    EXPECT_NEAR(h.w11(i), 1.0, 1e-10);
    EXPECT_NEAR(h.w12(i), 0.0, 1e-10);
    EXPECT_NEAR(h.w22(i), 1.0, 1e-10);
  }
}

TEST(DiscreteHessian, CrossStencilIsExactOnBilinear) {
  const auto g = disk_grid(1.0 / 16);
  const auto h = discrete_hessian(ScalarField::from_function(g, [](const Point& p) { return p.x() * p.y(); }));
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!h.valid(i)) continue;
    EXPECT_NEAR(h.w11(i), 0.0, 1e-10);
    EXPECT_NEAR(h.w12(i), 1.0, 1e-10);
    EXPECT_NEAR(h.w22(i), 0.0, 1e-10);
  }
}

TEST(DiscreteHessian, QuarticConvergesAtSecondOrder) {
  std::vector<double> hs{1.0 / 16, 1.0 / 32, 1.0 / 64};
  std::vector<double> err;
  for (double h : hs) {
    const auto g = disk_grid(h);
    const auto hess = discrete_hessian(ScalarField::from_function(g, [](const Point& p) { return std::pow(p.x(), 4); }));
    double e = 0.0;
    for (std::size_t i = 0; i < hess.size(); ++i) {
      if (hess.valid(i)) e = std::max(e, std::abs(hess.w11(i) - 12 * std::pow(g->point(i).x(), 2)));
    }
    err.push_back(e);
  }
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    EXPECT_NEAR(std::log(err[i] / err[i + 1]) / std::log(2.0), 2.0, 0.2);
  }
}

TEST(DiscreteHessian, NodesWithoutNeighboursAreInvalid) {
  const auto g = disk_grid(1.0 / 8);
  const auto h = discrete_hessian(ScalarField::from_function(g, [](const Point& p) { return p.squaredNorm(); }));
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!g->is_active(i)) EXPECT_FALSE(h.valid(i));
  }
  EXPECT_LT(h.valid_count(), g->count(NodeTag::kInterior) + g->count(NodeTag::kBoundary));
}

TEST(CofactorField, SmallExamples) {
  const auto g = disk_grid(0.5);
  const std::size_t c = g->index(3, 3);
  ASSERT_TRUE(g->is_interior(c));
  for (const auto& [h, expect] : std::vector<std::pair<Mat2, Mat2>>{
           {Mat2::Identity(), Mat2::Identity()},
           {mat(3, 0, 5), mat(5, 0, 3)},
           {mat(2, 1, 1), mat(1, -1, 2)},
       }) {
    TensorField hf(g);
    hf.set(c, h);
    const auto w = cofactor_field(hf);
    EXPECT_TRUE((w.at(c) - expect).cwiseAbs().maxCoeff() < 1e-15);
  }
  TensorField hf(g);
  hf.set(c, mat(2, 1, 1));
  EXPECT_NEAR(cofactor_field(hf).at(c).determinant(), 1.0, 1e-15);
}

TEST(CofactorField, AlgebraicIdentitiesOnRandomMatrices) {
  const auto g = disk_grid(1.0 / 16);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  TensorField hf(g);
  for (std::size_t i = 0; i < g->size(); ++i) {
    if (g->is_active(i)) hf.set(i, mat(u(rng), u(rng), u(rng)));
  }
  const auto w = cofactor_field(hf);
  for (std::size_t i = 0; i < g->size(); ++i) {
    if (!hf.valid(i)) continue;
    const Mat2 h = hf.at(i);
    const double d = h.determinant();
    EXPECT_LE((w.at(i) * h - d * Mat2::Identity()).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, std::abs(d)));
    EXPECT_NEAR(w.at(i).determinant(), d, 1e-12 * std::max(1.0, std::abs(d)));
  }
}

TEST(CofactorField, OneDimensionalCofactorIsOne) {
  const auto g = Grid::covering(ConvexDomain::interval(-1, 1), 1.0 / 8);
  const auto w = cofactor_of(ScalarField::from_function(g, [](const Point& p) { return 3 * p.x() * p.x(); }));
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w.valid(i)) EXPECT_EQ(w.w11(i), 1.0);
  }
}

TEST(ApplyLw, WorkedExamples) {
  const auto g = disk_grid(1.0 / 16);
  const auto q = ScalarField::from_function(g, [](const Point& p) { return 0.5 * p.squaredNorm(); });
  EXPECT_LE(max_abs_over_valid(apply_Lw(TensorField::constant(g, Mat2::Identity()), q), [](const Point&) { return 2.0; }),
            1e-10);
  // L_w w = tr(adj(H) H) = n det H, here 2.
  EXPECT_LE(max_abs_over_valid(apply_Lw(cofactor_of(q), q), [](const Point&) { return 2.0; }), 1e-10);
  const auto r2 = ScalarField::from_function(g, [](const Point& p) { return p.squaredNorm(); });
  EXPECT_LE(max_abs_over_valid(apply_Lw(TensorField::constant(g, mat(2, 0, 1)), r2), [](const Point&) { return 6.0; }),
            1e-10);
}

TEST(ApplyLw, AnnihilatesAffineFunctions) {
  const auto g = disk_grid(1.0 / 16);
  const auto w = TensorField::from_function(
      g, [](const Point& p) { return mat(2 + p.x(), 0.3 * p.y(), 1 + p.squaredNorm()); });
  const auto ell = ScalarField::from_function(g, [](const Point& p) { return 0.7 - 1.3 * p.x() + 2.1 * p.y(); });
  EXPECT_LE(max_abs_over_valid(apply_Lw(w, ell), [](const Point&) { return 0.0; }), 1e-10);
}

TEST(DivergenceResidual, ConstantFieldIsExactlyZero) {
  EXPECT_EQ(divergence_residual(TensorField::constant(disk_grid(1.0 / 16), Mat2::Identity())), 0.0);
}

// Cofactor of the analytic Hessian of a smooth potential is divergence
// free, so the centered residual is pure truncation error.
TEST(DivergenceResidual, AnalyticCofactorConvergesAtSecondOrder) {
  // w = |x|^2/2 + x1^3/6 + exp(x1 x2)/20.
  auto cof = [](const Point& p) {
    const double e = std::exp(p.x() * p.y()) / 20;
    const double h11 = 1 + p.x() + p.y() * p.y() * e;
    const double h12 = (1 + p.x() * p.y()) * e;
    const double h22 = 1 + p.x() * p.x() * e;
    return mat(h22, -h12, h11);
  };
  std::vector<double> res;
  for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) res.push_back(divergence_residual(TensorField::from_function(disk_grid(h), cof)));
  for (std::size_t i = 0; i + 1 < res.size(); ++i) {
    EXPECT_NEAR(std::log(res[i] / res[i + 1]) / std::log(2.0), 2.0, 0.3);
  }
}

TEST(EllipticityCheck, IsotropicQuadraticPasses) {
  const auto g = disk_grid(1.0 / 16);
  const auto r = ellipticity_check(cofactor_of(ScalarField::from_function(g, [](const Point& p) {
                                     return 0.5 * p.squaredNorm();
                                   })),
                                   EllipticityBounds(1, 1));
  EXPECT_TRUE(r.pass);
  EXPECT_FALSE(r.degenerate);
  EXPECT_NEAR(r.min_det, 1.0, 1e-10);
  EXPECT_NEAR(r.max_det, 1.0, 1e-10);
}

TEST(EllipticityCheck, AnisotropicHessianIsFlaggedDegenerate) {
  const auto g = disk_grid(1.0 / 16);
  const auto r = ellipticity_check(cofactor_field(TensorField::constant(g, mat(4, 0, 0.25))), EllipticityBounds(1, 1));
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.degenerate);
  EXPECT_NEAR(r.min_eigenvalue, 0.25, 1e-14);
  EXPECT_NEAR(r.max_eigenvalue, 4.0, 1e-14);
}

TEST(EllipticityCheck, ViolationIsReportedNotThrown) {
  const auto g = disk_grid(1.0 / 8);
  const auto r = ellipticity_check(TensorField::constant(g, mat(3, 0, 1)), EllipticityBounds(1, 2));
  EXPECT_FALSE(r.pass);
  EXPECT_TRUE(r.first_violation.has_value());
  EXPECT_EQ(r.violations, r.nodes);
}

TEST(EllipticityCheck, SolverOutputForRadialDensityPasses) {
  const auto d = ConvexDomain::ball(Point::Zero(), 1.0);
  const auto g = Grid::covering(d, 1.0 / 32);
  const auto w = solve_ma(MAProblem{d, ScalarField::from_function(g, [](const Point& p) { return 1 + p.squaredNorm(); }),
                                    EllipticityBounds(1, 2)},
                          g)
                     .w;
  // Restrict to nodes where the discrete Hessian sees only interior values.
  const auto hess = discrete_hessian(w);
  TensorField inner(g);
  for (std::size_t i = 0; i < g->size(); ++i) {
    if (g->is_interior(i) && hess.valid(i)) inner.set(i, hess.at(i));
  }
  EXPECT_TRUE(ellipticity_check(cofactor_field(inner), EllipticityBounds(1, 2), 1e-6).pass);
}

TEST(DecomposeTensor, NinePointSplitReproducesMatrix) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int t = 0; t < 200; ++t) {
    const double a = u(rng), b = u(rng);
    const double c = std::uniform_real_distribution<double>(-1, 1)(rng) * std::min(a, b);
    const auto dec = decompose_tensor(mat(a, c, b), 2, 1);
    EXPECT_FALSE(dec.fallback);
    Mat2 sum = Mat2::Zero();
    for (const auto& term : dec.terms) {
      EXPECT_GE(term.coeff, 0.0);
      sum += term.coeff * term.dir.vec() * term.dir.vec().transpose();
    }
    EXPECT_LE((sum - mat(a, c, b)).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(DecomposeTensor, StrongMixedTermUsesEigenDirections) {
  const auto dec = decompose_tensor(mat(1, 1.2, 2), 2, 2);
  EXPECT_TRUE(dec.fallback);
  ASSERT_FALSE(dec.terms.empty());
  for (const auto& t : dec.terms) EXPECT_GE(t.coeff, 0.0);
  EXPECT_THROW(decompose_tensor(mat(1, 2, 1), 2, 1), NonMonotoneStencil);
}

TEST(NearestLatticeDirection, PicksClosestPrimitiveOffset) {
  EXPECT_EQ(nearest_lattice_direction(Point(1, 0.05), 1), (Offset{1, 0}));
  EXPECT_EQ(nearest_lattice_direction(Point(1, -1), 1), (Offset{-1, 1}));  // canonical dy >= 0
  EXPECT_EQ(nearest_lattice_direction(Point(2, 1.02), 2), (Offset{2, 1}));
  EXPECT_EQ(nearest_lattice_direction(Point(-2, -1), 2), (Offset{2, 1}));
}

TEST(AssembleOperator, RandomPsdFieldGivesMMatrix) {
  const auto g = disk_grid(1.0 / 16);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  TensorField w(g);
  for (std::size_t i = 0; i < g->size(); ++i) {
    if (!g->is_active(i)) continue;
    Mat2 b;
    b << u(rng), u(rng), u(rng), u(rng);
    w.set(i, b * b.transpose() + 0.05 * Mat2::Identity());
  }
  const auto op = assemble_operator(w, g, [](const Point&) { return 0.0; });
  EXPECT_TRUE(op.monotone);
  EXPECT_GT(op.fallback_nodes, 0u);
}

TEST(AssembleOperator, ShortleyWellerIsExactOnQuadratics) {
  const auto g = disk_grid(1.0 / 16);
  const auto w = TensorField::constant(g, mat(2, 0.5, 1));
  auto q = [](const Point& p) { return 1.5 * p.x() * p.x() - p.x() * p.y() + 0.5 * p.y() * p.y() + p.x(); };
  const auto op = assemble_operator(w, g, q);
  const auto qf = ScalarField::from_function(g, q);
  const Eigen::VectorXd l = op.apply(op.gather(qf));
  // tr(W D^2 q) = 2*3 + 2*0.5*(-1) + 1*1 = 6.
  EXPECT_LE((l.array() - 6.0).abs().maxCoeff(), 1e-8);
}

}  // namespace
}  // namespace lmo
