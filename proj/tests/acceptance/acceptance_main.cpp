// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Expected values come from closed forms in support/oracles.hpp or from
// exact algebra; every tolerance is pinned here.

#include "lmo/linma/operator.hpp"
#include "lmo/linma/tensor_field.hpp"
#include "lmo/ma/solver.hpp"
#include "lmo/obstacle/comparison.hpp"
#include "lmo/obstacle/free_boundary.hpp"
#include "lmo/obstacle/perron.hpp"
#include "lmo/obstacle/solvers.hpp"
#include "lmo/regularity/holder.hpp"
#include "lmo/sections/normalization.hpp"
#include "lmo/sections/probes.hpp"
#include "support/oracles.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

namespace {

using namespace lmo;
namespace fs = std::filesystem;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double slope(double coarse_err, double fine_err) { return std::log2(coarse_err / fine_err); }

const ConvexDomain kDisk = ConvexDomain::ball(Point::Zero(), 1.0);

ScalarField solve_disk(double h, const std::function<double(const Point&)>& f, double lo, double hi) {
  const auto g = Grid::covering(kDisk, h);
  return solve_ma(MAProblem{kDisk, ScalarField::from_function(g, f), EllipticityBounds(lo, hi)}, g).w;
}

double interior_error(const ScalarField& u, const std::function<double(const Point&)>& exact) {
  double e = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u.grid().is_interior(i)) e = std::max(e, std::abs(u[i] - exact(u.grid().point(i))));
  }
  return e;
}

double interior_diff(const ScalarField& a, const ScalarField& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.grid().is_interior(i)) e = std::max(e, std::abs(a[i] - b[i]));
  }
  return e;
}

double one(const Point&) { return 1.0; }
double one_plus_r2(const Point& p) { return 1.0 + p.squaredNorm(); }

// 1. ||w - (|x|^2 - 1)/2|| <= 5e-3 at 1/64; refinement slope >= 1.7 (or
// both errors at roundoff, the scheme being exact on quadratics); the
// non-polynomial f = 1 + r^2 must show the slope. Runtime <= 60 s.
Verdict ma_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  auto paraboloid = [](const Point& p) { return 0.5 * (p.squaredNorm() - 1); };
  auto radial = [](const Point& p) { return oracle::ma_radial_density_solution(p.norm()); };
  const double e32 = interior_error(solve_disk(1.0 / 32, one, 1, 1), paraboloid);
  const double e64 = interior_error(solve_disk(1.0 / 64, one, 1, 1), paraboloid);
  const double r32 = interior_error(solve_disk(1.0 / 32, one_plus_r2, 1, 2), radial);
  const double r64 = interior_error(solve_disk(1.0 / 64, one_plus_r2, 1, 2), radial);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool roundoff = e32 <= 1e-9 && e64 <= 1e-9;
  const double s = slope(e32, e64);
  const double sr = slope(r32, r64);
  const bool pass = e64 <= 5e-3 && (roundoff || s >= 1.7) && sr >= 1.7 && secs <= 60;
  return {pass, "f=1 err@1/64 " + fmt(e64) + (roundoff ? " (roundoff at both levels)" : " slope " + fmt(s)) +
                    "; f=1+r^2 err " + fmt(r32) + " -> " + fmt(r64) + " slope " + fmt(sr) + "; " + fmt(secs) + " s"};
}

// 2. W H = det(H) I and det W = det(H)^(n-1) at every node, tol 1e-12
// relative to max(1, |det H|).
Verdict algebraic_identities() {
  double worst = 0.0;
  std::size_t nodes = 0;
  for (const auto& w : {solve_disk(1.0 / 64, one, 1, 1), solve_disk(1.0 / 64, one_plus_r2, 1, 2)}) {
    const TensorField hess = discrete_hessian(w);
    const TensorField cof = cofactor_field(hess);
    for (std::size_t i = 0; i < hess.size(); ++i) {
      if (!hess.valid(i)) continue;
      const Mat2 h = hess.at(i);
      const double d = h.determinant();
      const double scale = std::max(1.0, std::abs(d));
      worst = std::max(worst, (cof.at(i) * h - d * Mat2::Identity()).cwiseAbs().maxCoeff() / scale);
      worst = std::max(worst, std::abs(cof.at(i).determinant() - d) / scale);
      ++nodes;
    }
  }
  return {worst <= 1e-12, "max relative defect " + fmt(worst) + " over " + std::to_string(nodes) + " nodes"};
}

// 3. Divergence residual of the cofactor of w = |x|^2/2 + x1^3/6 under
// refinement. That cofactor is affine, so centered differences annihilate
// it; the slope 2 +- 0.3 is then required of w + exp(x1 x2)/20.
Verdict divergence_free() {
  auto w_cubic = [](const Point& p) { return 0.5 * p.squaredNorm() + std::pow(p.x(), 3) / 6; };
  auto w_exp = [&](const Point& p) { return w_cubic(p) + std::exp(p.x() * p.y()) / 20; };
  std::vector<double> cubic, expo;
  for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128}) {
    const auto g = Grid::covering(kDisk, h);
    cubic.push_back(divergence_residual(cofactor_of(ScalarField::from_function(g, w_cubic))));
    expo.push_back(divergence_residual(cofactor_of(ScalarField::from_function(g, w_exp))));
  }
  bool roundoff = true;
  for (double r : cubic) roundoff = roundoff && r <= 1e-9;
  bool slopes_ok = true;
  std::string s;
  for (std::size_t i = 0; i + 1 < expo.size(); ++i) {
    const double k = slope(expo[i], expo[i + 1]);
    slopes_ok = slopes_ok && std::abs(k - 2.0) <= 0.3;
    s += (i ? "," : "") + fmt(k);
  }
  return {roundoff && slopes_ok, "cubic potential max residual " + fmt(*std::max_element(cubic.begin(), cubic.end())) +
                                     " (exact case); exp potential slopes " + s};
}

ObstacleProblem envelope_problem(int cells) {
  const auto g = Grid::covering(ConvexDomain::interval(-1, 1), 2.0 / cells);
  return {TensorField::constant(g, Mat2::Identity()),
          ScalarField::from_function(g, [](const Point& p) { return oracle::envelope_phi(p.x()); })};
}

// 4. Concave envelope of 1/2 - x^2 on (-1, 1) at N = 256.
Verdict envelope_1d() {
  const auto p = envelope_problem(256);
  const LCPSolution s = solve_obstacle_activeset(p);
  const auto env = oracle::continuous_envelope();
  const double err = interior_error(s.u, [&](const Point& x) { return env(x.x()); });
  const FreeBoundary fb = free_boundary(s);
  const double h = p.grid().spacing();
  double fb_err = std::numeric_limits<double>::infinity();
  if (fb.points.size() == 2) {
    fb_err = std::max(std::abs(fb.points[0].x() + oracle::kEnvelopeEdge), std::abs(fb.points[1].x() - oracle::kEnvelopeEdge));
  }
  const bool pass = fb_err <= 2 * h && err <= 1e-4 && s.residual <= 1e-8;
  return {pass, "free boundary off by " + fmt(fb_err / h) + " cells; ||u - env|| " + fmt(err) + "; residual " +
                    fmt(s.residual)};
}

// 5. PSOR, active set and Perron dropping agree within 1e-4.
Verdict uniqueness() {
  std::vector<std::pair<std::string, ObstacleProblem>> corpus;
  corpus.emplace_back("envelope-1d", envelope_problem(256));
  const auto gr = Grid::covering(kDisk, 1.0 / 32);
  auto phi = [](const Point& p) { return 0.5 - p.squaredNorm(); };
  corpus.emplace_back("radial-2d", ObstacleProblem{TensorField::constant(gr, Mat2::Identity()), ScalarField::from_function(gr, phi)});
  corpus.emplace_back("f=1+r^2", ObstacleProblem{cofactor_of(solve_disk(1.0 / 32, one_plus_r2, 1, 2)), ScalarField::from_function(gr, phi)});
  ObstacleParams prm;
  prm.tol_lcp = 1e-10;
  prm.perron_change_tol = 1e-12;
  double worst = 0.0;
  std::string detail;
  for (const auto& [name, p] : corpus) {
    const auto a = solve_obstacle_psor(p, prm).u;
    const auto b = solve_obstacle_activeset(p, prm).u;
    const auto c = perron_dropping(p, concave_supersolution(p), prm).v;
    const double d = std::max({interior_diff(a, b), interior_diff(a, c), interior_diff(b, c)});
    worst = std::max(worst, d);
    detail += (detail.empty() ? "" : "; ") + name + " " + fmt(d);
  }
  return {worst <= 1e-4, "max pairwise diff: " + detail};
}

// 6. 50 random sub/supersolution pairs, boundary-ordered, never cross inside.
// Half use W = I with random quadratics; half use the cofactor of the
// f = 1 + r^2 potential with u = a w + affine and v = -b w + affine + lift
// (second differences of the convex w are nonnegative).
Verdict comparison_harness() {
  const auto g = Grid::covering(kDisk, 1.0 / 32);
  const auto w = solve_disk(1.0 / 32, one_plus_r2, 1, 2);
  const TensorField id = TensorField::constant(g, Mat2::Identity());
  const TensorField cof = cofactor_of(w);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u01(-1, 1);
  auto boundary_lift = [&](const std::function<double(std::size_t)>& gap) {
    double lift = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g->size(); ++i) {
      if (g->is_active(i) && !g->is_interior(i)) lift = std::max(lift, gap(i));
    }
    return lift + 0.05 * std::abs(u01(rng));
  };
  int violations = 0, pairs = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 50; ++k) {
    const Point b1(u01(rng), u01(rng)), b2(u01(rng), u01(rng));
    const double c1 = u01(rng), c2 = u01(rng);
    std::vector<double> uv(g->size()), vv(g->size());
    const TensorField* coeff = &id;
    if (k % 2 == 0) {
      Mat2 a;
      a << u01(rng), u01(rng), 0, u01(rng);
      a(1, 0) = a(0, 1);
      a += (std::max(0.0, -a.trace()) / 2 + 0.1 * std::abs(u01(rng))) * Mat2::Identity();
      Mat2 c;
      c << u01(rng), u01(rng), 0, u01(rng);
      c(1, 0) = c(0, 1);
      c -= (std::max(0.0, c.trace()) / 2 + 0.1 * std::abs(u01(rng))) * Mat2::Identity();
      for (std::size_t i = 0; i < g->size(); ++i) {
        const Point x = g->point(i);
        uv[i] = 0.5 * x.dot(a * x) + b1.dot(x) + c1;
        vv[i] = 0.5 * x.dot(c * x) + b2.dot(x) + c2;
      }
    } else {
      coeff = &cof;
      const double a = 0.1 + std::abs(u01(rng)), b = 0.1 + std::abs(u01(rng));
      for (std::size_t i = 0; i < g->size(); ++i) {
        const Point x = g->point(i);
        uv[i] = a * w[i] + b1.dot(x) + c1;
        vv[i] = -b * w[i] + b2.dot(x) + c2;
      }
    }
    const double lift = boundary_lift([&](std::size_t i) { return uv[i] - vv[i]; });
    for (double& v : vv) v += lift;
    const ComparisonResult r = check_comparison(ScalarField(g, uv), ScalarField(g, vv), *coeff);
    ++pairs;
    if (!r.holds) ++violations;
    worst = std::max(worst, r.max_excess);
  }
  return {violations == 0 && pairs == 50,
          std::to_string(pairs) + " pairs, " + std::to_string(violations) + " violations, max u - v " + fmt(worst)};
}

// 7. Section-ball inclusions at every height for f = 1 and f = 1 + r^2;
// sigma = 0.5 +- 0.02 for the quadratic potential.
Verdict section_inclusions() {
  const std::vector<double> heights{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256};
  const auto quad = section_ball_probe(solve_disk(1.0 / 128, one, 1, 1), Point::Zero(), heights);
  const auto rad = section_ball_probe(solve_disk(1.0 / 128, one_plus_r2, 1, 2), Point::Zero(), heights);
  const bool pass = quad.inclusions_hold && rad.inclusions_hold && std::abs(quad.sigma - 0.5) <= 0.02;
  return {pass, "f=1 sigma " + fmt(quad.sigma) + " C1 " + fmt(quad.c1) + " C2 " + fmt(quad.c2) + "; f=1+r^2 sigma " +
                    fmt(rad.sigma) + " C1 " + fmt(rad.c1) + " C2 " + fmt(rad.c2) + "; inclusions " +
                    (quad.inclusions_hold && rad.inclusions_hold ? "hold" : "FAIL")};
}

// 8. Harnack constant over 10 random positive data changes <= 20% under one refinement.
Verdict harnack() {
  std::mt19937_64 rng(7);
  std::vector<LogTrigData> data;
  for (int k = 0; k < 10; ++k) data.push_back(LogTrigData::random(rng, Point::Zero()));
  std::vector<double> ch;
  for (double hg : {1.0 / 64, 1.0 / 128}) {
    const auto w = solve_disk(hg, one, 1, 1);
    const auto cof = cofactor_of(w);
    double c = 0.0;
    for (const auto& d : data) c = std::max(c, harnack_quotient(cof, w, Point::Zero(), 1.0 / 16, d).quotient);
    ch.push_back(c);
  }
  const double change = std::abs(ch[1] - ch[0]) / ch[0];
  return {change <= 0.2 && std::isfinite(ch[1]),
          "C_H " + fmt(ch[0]) + " @1/64, " + fmt(ch[1]) + " @1/128, change " + fmt(100 * change) + "%"};
}

// 9. delta_k <= 1e-6 for k <= 4 on the quadratic potential (eps = 0) at
// 1/256; for f in [1 - eps, 1 + eps], eps = 1e-4, h0 = 1/8, the measured
// delta_k lies under the fitted (C sqrt h0)^k + 2 C sqrt(eps) / h0 with
// C sqrt h0 < 1.
Verdict normalization() {
  const auto g = Grid::covering(kDisk, 1.0 / 256);
  IterationParams exact;
  exact.h0 = 0.125;
  exact.k_max = 4;
  const auto quad = iterate_normalization(ScalarField::from_function(g, [](const Point& p) { return 0.5 * p.squaredNorm(); }),
                                          Point::Zero(), exact);
  double dmax = 0.0;
  for (const auto& s : quad.steps) dmax = std::max(dmax, s.delta);
  const bool exact_ok = quad.steps.size() == 4 && dmax <= 1e-6;

  const double eps = 1e-4;
  const auto w = solve_ma(MAProblem{kDisk,
                                    ScalarField::from_function(g, [eps](const Point& p) {
                                      return 1 + eps * std::sin(3 * p.x() + 1) * std::cos(2 * p.y());
                                    }),
                                    EllipticityBounds(1 - eps, 1 + eps)},
                          g)
                     .w;
  IterationParams pert = exact;
  pert.eps = eps;
  const auto r = iterate_normalization(w, Point::Zero(), pert);
  bool dominated = !r.steps.empty();
  RecursionFit fit;
  std::string deltas;
  if (dominated) {
    fit = fit_recursion_constant(r.steps, pert.h0, eps);
    for (std::size_t i = 0; i < r.steps.size(); ++i) {
      dominated = dominated && r.steps[i].delta <= fit.profile[i];
      deltas += (i ? "," : "") + fmt(r.steps[i].delta);
    }
  }
  const bool pert_ok = dominated && fit.contracting;
  return {exact_ok && pert_ok, "eps=0: " + std::to_string(quad.steps.size()) + " steps, max delta " + fmt(dmax) +
                                   "; eps=1e-4: " + std::to_string(r.steps.size()) + " steps, delta " + deltas + ", C " +
                                   fmt(fit.c) + ", C sqrt(h0) " + fmt(fit.c * std::sqrt(pert.h0)) +
                                   (dominated ? ", dominated" : ", NOT dominated")};
}

// 10. Calibrations recover 1.0 and 0.5 within 0.05; the f = 1 obstacle
// solution at 1/256 gives alpha_hat >= 0.9.
Verdict holder() {
  const auto g = Grid::covering(kDisk, 1.0 / 256);
  const Point c(0.05, -0.02);
  const auto flat = ScalarField::from_function(g, [](const Point&) { return -1.0; });
  const auto lin = holder_exponent(ScalarField::from_function(g, [&](const Point& p) { return 0.5 * (p - c).squaredNorm(); }),
                                   flat, c, dyadic_radii(2, 6), 1e-10);
  const auto half = holder_exponent(
      ScalarField::from_function(g, [&](const Point& p) { return 2.0 / 3.0 * std::pow((p - c).norm(), 1.5); }), flat, c,
      dyadic_radii(2, 6), 1e-10);
  const auto w = solve_disk(1.0 / 256, one, 1, 1);
  const ObstacleProblem p{cofactor_of(w), ScalarField::from_function(g, [](const Point& x) { return 0.5 - x.squaredNorm(); })};
  const LCPSolution s = solve_obstacle_activeset(p);
  const Point y0(oracle::RadialObstacleOracle().r_star, 0.0);
  const auto fit = holder_exponent(s.u, s.phi, y0, dyadic_radii(2, 6), s.tol_contact);
  const bool pass = std::abs(lin.alpha - 1.0) <= 0.05 && std::abs(half.alpha - 0.5) <= 0.05 && fit.alpha >= 0.9;
  return {pass, "calibrations " + fmt(lin.alpha) + ", " + fmt(half.alpha) + "; obstacle alpha_hat " + fmt(fit.alpha) +
                    " +- " + fmt(fit.alpha_se) + " fit rms " + fmt(fit.rms)};
}

std::map<std::string, std::string> csv_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".csv") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[e.path().filename().string()] = ss.str();
  }
  return out;
}

// 11. Two CLI runs with the same config and seed give byte-identical CSVs.
Verdict determinism(const std::string& cli, const fs::path& configs, const fs::path& work) {
  std::size_t files = 0;
  std::string mismatched;
  for (const char* name : {"determinism_full", "determinism_harnack"}) {
    const fs::path cfg = configs / "acceptance" / (std::string(name) + ".json");
    std::ifstream in(cfg);
    const std::string pipeline = nlohmann::json::parse(in).at("pipeline").get<std::string>();
    std::vector<std::map<std::string, std::string>> runs;
    for (int k = 0; k < 2; ++k) {
      const fs::path out = work / (std::string(name) + "_run" + std::to_string(k));
      fs::remove_all(out);
      const std::string cmd = "\"" + cli + "\" " + pipeline + " --config \"" + cfg.string() + "\" --out \"" + out.string() +
                              "\" --seed 11 2>/dev/null";
      if (std::system(cmd.c_str()) != 0) return {false, std::string(name) + ": CLI run failed"};
      runs.push_back(csv_bytes(out));
    }
    if (runs[0].empty()) return {false, std::string(name) + ": no CSV artifacts"};
    for (const auto& [file, bytes] : runs[0]) {
      ++files;
      const auto it = runs[1].find(file);
      if (it == runs[1].end() || it->second != bytes) mismatched += " " + file;
    }
    if (runs[0].size() != runs[1].size()) mismatched += " (file sets differ)";
  }
  return {mismatched.empty(), std::to_string(files) + " CSV files compared" + (mismatched.empty() ? "" : "; differ:" + mismatched)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string workdir, cli, configs;
  app.add_option("--workdir", workdir)->required();
  app.add_option("--cli", cli)->required();
  app.add_option("--configs", configs)->required();
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(workdir);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"MA oracle match", ma_oracle},
      {"cofactor algebraic identities", algebraic_identities},
      {"divergence-free cofactor", divergence_free},
      {"1D obstacle oracle", envelope_1d},
      {"solver agreement", uniqueness},
      {"comparison harness", comparison_harness},
      {"section-ball inclusions", section_inclusions},
      {"Harnack constant stability", harnack},
      {"iterated normalization", normalization},
      {"Holder exponent", holder},
      {"determinism", [&] { return determinism(cli, configs, workdir); }},
  };
  const auto start = std::chrono::steady_clock::now();
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failed;
    std::cout << "criterion " << (i + 1) << " " << (v.pass ? "PASS" : "FAIL") << " [" << criteria[i].first << "] "
              << v.detail << " (" << fmt(secs) << " s)" << std::endl;
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_budget = total <= 600;
  std::cout << "suite runtime " << fmt(total) << " s (budget 600 s) " << (in_budget ? "PASS" : "FAIL") << std::endl;
  return failed == 0 && in_budget ? 0 : 1;
}
