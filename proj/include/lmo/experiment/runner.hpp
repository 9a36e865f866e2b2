#pragma once

#include "lmo/core/error.hpp"
#include "lmo/experiment/expression.hpp"
#include "lmo/experiment/schema.hpp"
#include "lmo/geometry/io.hpp"
#include "lmo/linma/tensor_field.hpp"
#include "lmo/ma/solver.hpp"
#include "lmo/obstacle/free_boundary.hpp"
#include "lmo/obstacle/perron.hpp"
#include "lmo/obstacle/solvers.hpp"
#include "lmo/regularity/growth.hpp"
#include "lmo/regularity/holder.hpp"
#include "lmo/regularity/rescale.hpp"
#include "lmo/sections/normalization.hpp"
#include "lmo/sections/probes.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace lmo {

inline constexpr const char* kLmoVersion = "0.1.0";

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

struct RunOptions {
  std::string pipeline;          // subcommand; must agree with config "pipeline" if both are set
  std::string out_dir;           // overrides config "output"
  std::optional<std::uint64_t> seed;  // overrides config "seed"
  bool verbose = false;
};

namespace detail {

using nlohmann::json;

inline double num(const json& j, const char* key, double fallback) { return j.contains(key) ? j[key].get<double>() : fallback; }
inline int integer(const json& j, const char* key, int fallback) { return j.contains(key) ? j[key].get<int>() : fallback; }

inline Point point_of(const json& j) {
  return Point(j.at(0).get<double>(), j.size() > 1 ? j.at(1).get<double>() : 0.0);
}

inline std::vector<double> numbers(const json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(x.get<double>());
  return v;
}

inline ConvexDomain parse_domain(const json& d) {
  const std::string kind = d["kind"].get<std::string>();
  if (kind == "interval") {
    if (!d.contains("a") || !d.contains("b")) throw SchemaError("domain", "interval needs a and b");
    if (!(d["a"].get<double>() < d["b"].get<double>())) throw SchemaError("domain.b", "must exceed domain.a");
    return ConvexDomain::interval(d["a"].get<double>(), d["b"].get<double>());
  }
  if (kind == "ball") {
    if (!d.contains("radius")) throw SchemaError("domain.radius", "required for a ball");
    const Point c = d.contains("center") ? point_of(d["center"]) : Point::Zero();
    return ConvexDomain::ball(c, d["radius"].get<double>());
  }
  if (!d.contains("vertices")) throw SchemaError("domain.vertices", "required for a polygon");
  std::vector<Point> v;
  for (const auto& p : d["vertices"]) v.push_back(point_of(p));
  try {
    return ConvexDomain::polygon(std::move(v));
  } catch (const Error& e) {
    throw SchemaError("domain.vertices", e.what());
  }
}

inline Expression parse_expression(const json& j, const std::string& path) {
  try {
    return Expression(j.get<std::string>());
  } catch (const InvalidInput& e) {
    throw SchemaError(path, e.what());
  }
}

/// Everything a pipeline derives from the config before running probes.
struct Setup {
  json config;
  std::string pipeline;
  std::uint64_t seed = 0;
  ConvexDomain domain = ConvexDomain::interval(-1, 1);
  GridPtr grid;
  int dim = 2;
  json tolerances;
};

inline MASolverParams ma_params(const json& c) {
  MASolverParams p;
  if (c.contains("solver")) {
    const json& s = c["solver"];
    p.tol_ma = num(s, "tol_ma", p.tol_ma);
    p.tol_convex = num(s, "tol_convex", p.tol_convex);
    p.max_newton = integer(s, "max_newton", p.max_newton);
    p.stencil_width = integer(s, "stencil_width", p.stencil_width);
  }
  return p;
}

inline ObstacleParams obstacle_params(const json& c) {
  ObstacleParams p;
  if (c.contains("solver")) {
    const json& s = c["solver"];
    p.tol_lcp = num(s, "tol_lcp", p.tol_lcp);
    p.omega = num(s, "omega", p.omega);
    p.max_sweeps = integer(s, "max_sweeps", p.max_sweeps);
    p.stencil_width = integer(s, "stencil_width", p.stencil_width);
    p.perron_change_tol = num(s, "perron_change_tol", p.perron_change_tol);
  }
  return p;
}

inline std::string method_of(const json& c) {
  return c.contains("solver") && c["solver"].contains("method") ? c["solver"]["method"].get<std::string>() : "activeset";
}

inline Point default_center(const Setup& s);

inline ScalarField density(const Setup& s) {
  if (!s.config.contains("f")) throw SchemaError("f", "required to solve Monge-Ampere");
  const json& f = s.config["f"];
  const std::string kind = f["kind"].get<std::string>();
  if (kind == "constant") {
    const double v = num(f, "value", 1.0);
    return ScalarField::from_function(s.grid, [v](const Point&) { return v; });
  }
  if (!f.contains("expression")) throw SchemaError("f.expression", "required for kind " + kind);
  const Expression e = parse_expression(f["expression"], "f.expression");
  if (kind == "radial") {
    const Point c = default_center(s);
    return ScalarField::from_function(s.grid, [e, c](const Point& p) { return e(Point((p - c).norm(), 0.0)); });
  }
  return ScalarField::from_function(s.grid, [e](const Point& p) { return e(p); });
}

struct Potential {
  ScalarField w;
  json report;
};

inline Potential potential(Setup& s, std::ostream& log) {
  json src = s.config.contains("w_source") ? s.config["w_source"] : json{{"kind", "ma"}};
  const std::string kind = src["kind"].get<std::string>();
  if (kind == "analytic") {
    if (!src.contains("expression")) throw SchemaError("w_source.expression", "required for an analytic potential");
    const Expression e = parse_expression(src["expression"], "w_source.expression");
    return {ScalarField::from_function(s.grid, [e](const Point& p) { return e(p); }), {{"kind", "analytic"}, {"expression", e.source()}}};
  }
  if (kind == "file") {
    if (!src.contains("csv") || !src.contains("meta")) throw SchemaError("w_source", "file potential needs csv and meta");
    ScalarField w = read_scalar_field(src["csv"].get<std::string>(), src["meta"].get<std::string>());
    if (!w.grid().same_lattice(*s.grid)) throw SchemaError("w_source.csv", "lattice differs from grid.h and domain");
    return {ScalarField(s.grid, w.values()), {{"kind", "file"}, {"csv", src["csv"]}}};
  }
  const ScalarField f = density(s);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!s.grid->is_interior(i)) continue;
    lo = std::min(lo, f[i]);
    hi = std::max(hi, f[i]);
  }
  lo = num(s.config["f"], "lambda", lo);
  hi = num(s.config["f"], "Lambda", hi);
  if (!(lo > 0.0)) throw SchemaError("f", "density must be positive on the interior nodes");
  const MASolverParams mp = ma_params(s.config);
  s.tolerances["tol_ma"] = mp.tol_ma;
  s.tolerances["tol_convex"] = mp.tol_convex;
  s.tolerances["ma_stencil_width"] = mp.stencil_width;
  log << "solve_ma: tol_ma=" << mp.tol_ma << " tol_convex=" << mp.tol_convex << " width=" << mp.stencil_width << '\n';
  const MASolution sol = solve_ma(MAProblem{s.domain, f, EllipticityBounds(lo, hi)}, s.grid, mp);
  json rep = {{"kind", "ma"},
              {"max_residual", sol.max_residual},
              {"mean_residual", sol.mean_residual},
              {"convexity_margin", sol.convexity_margin},
              {"iterations", sol.newton_iterations},
              {"pseudo_time_steps", sol.pseudo_time_steps},
              {"lambda", lo},
              {"Lambda", hi}};
  return {sol.w, rep};
}

struct ObstacleRun {
  ObstacleProblem problem;
  LCPSolution sol;
  json report;
};

inline ObstacleRun solve_obstacle(Setup& s, const ScalarField& w, std::ostream& log) {
  if (!s.config.contains("obstacle")) throw SchemaError("obstacle", "required for obstacle pipelines");
  const Expression e = parse_expression(s.config["obstacle"], "obstacle");
  ObstacleProblem p{cofactor_of(w), ScalarField::from_function(s.grid, [e](const Point& x) { return e(x); })};
  const ObstacleParams prm = obstacle_params(s.config);
  const std::string method = method_of(s.config);
  s.tolerances["tol_lcp"] = prm.tol_lcp;
  s.tolerances["tol_contact"] = p.tol_contact();
  s.tolerances["obstacle_stencil_width"] = prm.stencil_width;
  if (method == "psor") s.tolerances["omega"] = prm.omega;
  if (method == "perron") s.tolerances["perron_change_tol"] = prm.perron_change_tol;
  log << "solve_obstacle: method=" << method << " tol_lcp=" << prm.tol_lcp << " tol_contact=" << p.tol_contact() << '\n';
  LCPSolution sol = [&] {
    if (method == "psor") return solve_obstacle_psor(p, prm);
    if (method == "activeset") return solve_obstacle_activeset(p, prm);
    const PerronResult r = perron_dropping(p, concave_supersolution(p), prm);
    const DiscreteLcp d = discretize(p, prm.stencil_width);
    return make_solution(p, d, d.op.gather(r.v), r.sweeps, "perron");
  }();
  json rep = {{"solver", sol.solver},
              {"residual", sol.residual},
              {"iterations", sol.iterations},
              {"contact_nodes", sol.contact_count()},
              {"tol_contact", sol.tol_contact},
              {"warnings", sol.warnings}};
  return {std::move(p), std::move(sol), rep};
}

inline void write_obstacle_outputs(const std::filesystem::path& out, const LCPSolution& sol, const FreeBoundary* fb) {
  write_scalar_field((out / "u").string(), sol.u);
  std::ostringstream mask;
  mask << "x,y,contact\n";
  const Grid& g = sol.u.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.is_active(i)) continue;
    const Point p = g.point(i);
    mask << fmt17(p.x()) << ',' << fmt17(p.y()) << ',' << int(sol.contact[i]) << '\n';
  }
  write_text((out / "contact_mask.csv").string(), mask.str());
  std::ostringstream fbs;
  fbs << "x,y\n";
  if (fb) {
    for (const Point& p : fb->points) fbs << fmt17(p.x()) << ',' << fmt17(p.y()) << '\n';
  }
  write_text((out / "free_boundary.csv").string(), fbs.str());
}

inline Point default_center(const Setup& s) {
  if (s.domain.kind() != ConvexDomain::Kind::kPolygon) return s.domain.center();
  Point c = Point::Zero();
  for (const Point& v : s.domain.vertices()) c += v;
  return c / static_cast<double>(s.domain.vertices().size());
}

inline Point center_of(const json& block, const Setup& s) {
  return block.contains("center") ? point_of(block["center"]) : default_center(s);
}

inline json probe_sections(const Setup& s, const ScalarField& w, const std::filesystem::path& out) {
  const json b = s.config.value("sections", json::object());
  const Point c = center_of(b, s);
  const std::vector<double> heights =
      b.contains("heights") ? numbers(b["heights"]) : std::vector<double>{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512};
  const SectionProbeResult r = section_ball_probe(w, c, heights);
  std::ostringstream csv;
  csv << "h,r_in,r_out,r_in_over_h,r_out_over_h_sigma,convexity_defect,nodes,half_inclusion,beta\n";
  double worst_defect = 0.0, worst_beta = 0.0;
  bool half_ok = true;
  for (const auto& rec : r.records) {
    const Section sec = extract_section(w, c, rec.height);
    const double defect = section_convexity_defect(sec);
    const EngulfingReport eg = engulfing_check(w, c, rec.height);
    worst_defect = std::max(worst_defect, defect);
    worst_beta = std::max(worst_beta, eg.beta);
    half_ok = half_ok && eg.half_inclusion;
    csv << fmt17(rec.height) << ',' << fmt17(rec.inradius) << ',' << fmt17(rec.circumradius) << ','
        << fmt17(rec.inradius / rec.height) << ',' << fmt17(rec.circumradius / std::pow(rec.height, r.sigma)) << ','
        << fmt17(defect) << ',' << sec.nodes.size() << ',' << int(eg.half_inclusion) << ',' << fmt17(eg.beta) << '\n';
  }
  write_text((out / "sections.csv").string(), csv.str());
  return {{"center", {c.x(), c.y()}},
          {"sigma", r.sigma},
          {"sigma_fit_rms", r.sigma_rms},
          {"sigma_inradius", r.sigma_in},
          {"C1", r.c1},
          {"C2", r.c2},
          {"C1_spread", r.c1_spread},
          {"C2_spread", r.c2_spread},
          {"inclusions_hold", r.inclusions_hold},
          {"max_convexity_defect_cells", worst_defect},
          {"half_inclusion", half_ok},
          {"max_beta", worst_beta}};
}

inline json probe_harnack(Setup& s, const ScalarField& w, const std::filesystem::path& out, std::ostream& log) {
  const json b = s.config.value("harnack", json::object());
  const Point c = center_of(b, s);
  const double h = num(b, "h", 1.0 / 16);
  const int draws = integer(b, "draws", 10);
  const int modes = integer(b, "modes", 3);
  const double amp = num(b, "amplitude", 0.5);
  const bool refine = b.value("refine", false);
  std::mt19937_64 rng(s.seed);
  std::vector<LogTrigData> data;
  for (int k = 0; k < draws; ++k) data.push_back(LogTrigData::random(rng, c, modes, amp));

  std::vector<ScalarField> potentials{w};
  if (refine) {
    Setup fine = s;
    fine.grid = Grid::covering(s.domain, 0.5 * s.grid->spacing());
    std::ostringstream quiet;
    potentials.push_back(potential(fine, log).w);
  }
  std::ostringstream csv;
  csv << "grid_h,draw,quotient,sup,inf,unknowns\n";
  json per_grid = json::array();
  for (const ScalarField& pw : potentials) {
    const TensorField cof = cofactor_of(pw);
    double cmax = 0.0;
    for (int k = 0; k < draws; ++k) {
      const HarnackResult r = harnack_quotient(cof, pw, c, h, data[k]);
      cmax = std::max(cmax, r.quotient);
      csv << fmt17(pw.grid().spacing()) << ',' << k << ',' << fmt17(r.quotient) << ',' << fmt17(r.sup) << ','
          << fmt17(r.inf) << ',' << r.unknowns << '\n';
    }
    per_grid.push_back({{"grid_h", pw.grid().spacing()}, {"C_H", cmax}});
  }
  write_text((out / "harnack.csv").string(), csv.str());
  json rep = {{"center", {c.x(), c.y()}}, {"h", h}, {"draws", draws}, {"per_grid", per_grid}};
  if (per_grid.size() == 2) {
    const double a = per_grid[0]["C_H"].get<double>(), bb = per_grid[1]["C_H"].get<double>();
    rep["relative_change"] = std::abs(bb - a) / a;
  }
  return rep;
}

inline json probe_normalization(Setup& s, const ScalarField& w, const std::filesystem::path& out) {
  const json b = s.config.value("normalization", json::object());
  const Point c = center_of(b, s);
  IterationParams p;
  p.h0 = num(b, "h0", p.h0);
  p.theta = num(b, "theta", p.theta);
  p.eps = num(b, "eps", p.eps);
  p.k_max = integer(b, "k_max", p.k_max);
  p.c_cfg = num(b, "c_cfg", p.c_cfg);
  p.resample_spacing = num(b, "resample_spacing", p.resample_spacing);
  p.min_cells = num(b, "min_cells", p.min_cells);
  s.tolerances["mvee_tol"] = p.mvee_tol;
  s.tolerances["det_slack"] = p.det_slack;
  const NormalizationResult r = iterate_normalization(w, c, p);
  std::ostringstream csv;
  csv << "k,delta_k,r_in,r_out,a11,a12,a21,a22,p1,p2,r_in_original,profile\n";
  json rep = {{"center", {c.x(), c.y()}},
              {"h0", p.h0},
              {"theta", p.theta},
              {"eps", p.eps},
              {"steps", r.steps.size()},
              {"stop_reason", r.stop_reason},
              {"det_at_center", r.det_at_center},
              {"det_pinch", r.det_pinch},
              {"admissible", r.admissible}};
  std::vector<double> profile(r.steps.size(), std::numeric_limits<double>::quiet_NaN());
  if (!r.steps.empty()) {
    const RecursionFit f = fit_recursion_constant(r.steps, p.h0, p.eps);
    const ABounds ab = fit_a_bounds(r.steps, p.h0, p.theta, w.grid().dim());
    profile = f.profile;
    double dmax = 0.0;
    for (const auto& st : r.steps) dmax = std::max(dmax, st.delta);
    rep["C_fit"] = f.c;
    rep["C_sqrt_h0"] = f.c * std::sqrt(p.h0);
    rep["contracting"] = f.contracting;
    rep["A_upper_C"] = ab.c_hi;
    rep["A_lower_C"] = ab.c_lo;
    rep["max_delta"] = dmax;
  }
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const auto& st = r.steps[i];
    csv << st.k << ',' << fmt17(st.delta) << ',' << fmt17(st.r_in) << ',' << fmt17(st.r_out) << ',' << fmt17(st.a(0, 0))
        << ',' << fmt17(st.a(0, 1)) << ',' << fmt17(st.a(1, 0)) << ',' << fmt17(st.a(1, 1)) << ',' << fmt17(st.p.x())
        << ',' << fmt17(st.p.y()) << ',' << fmt17(st.r_in_original) << ',' << fmt17(profile[i]) << '\n';
  }
  write_text((out / "normalization.csv").string(), csv.str());
  return rep;
}

/// Free-boundary vertex with the largest x (smallest y on ties).
inline Point default_anchor(const FreeBoundary& fb) {
  Point best = fb.points.front();
  for (const Point& p : fb.points) {
    if (p.x() > best.x() || (p.x() == best.x() && p.y() < best.y())) best = p;
  }
  return best;
}

inline std::vector<PairSample> sample_pairs(const Setup& s, const FreeBoundary& fb, int count, double radius) {
  std::mt19937_64 rng(s.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_int_distribution<std::size_t> pick(0, fb.points.size() - 1);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double margin = 2 * s.grid->spacing();
  std::vector<PairSample> out;
  int attempts = 0;
  auto offset = [&] {
    if (s.dim == 1) return Point(radius * unit(rng), 0.0);
    Point d;
    do d = Point(unit(rng), unit(rng));
    while (d.squaredNorm() > 1.0);
    return Point(radius * d);
  };
  while (static_cast<int>(out.size()) < count && attempts < 100 * count + 100) {
    ++attempts;
    const Point q = fb.points[pick(rng)];
    const Point y1 = q + offset();
    const Point y2 = y1 + offset();
    if (s.domain.signed_distance(y1) > -margin || s.domain.signed_distance(y2) > -margin) continue;
    if ((y1 - y2).norm() < s.grid->spacing()) continue;
    out.push_back({y1, y2});
  }
  return out;
}

inline json probe_holder(Setup& s, const ScalarField& w, const LCPSolution& sol, const FreeBoundary& fb,
                         const std::filesystem::path& out) {
  const json b = s.config.value("holder", json::object());
  const Point y0 = b.contains("anchor") ? point_of(b["anchor"]) : default_anchor(fb);
  const std::vector<double> radii = b.contains("radii") ? numbers(b["radii"]) : dyadic_radii(2, 6);
  const double gamma = num(b, "gamma", 0.9);
  const double theta = num(b, "theta", 0.1);
  const std::vector<double> heights =
      b.contains("growth_heights") ? numbers(b["growth_heights"]) : std::vector<double>{0.125, 0.0625, 0.03125, 0.015625, 0.0078125};
  const double rescale_h = num(b, "rescale_h", heights.front());
  const int npairs = integer(b, "pairs", 200);
  const double pair_radius = num(b, "pair_radius", 0.1);

  const ExponentFit fit = holder_exponent(sol.u, sol.phi, y0, radii, sol.tol_contact);
  std::ostringstream ecsv;
  ecsv << "r,M,samples\n";
  for (std::size_t i = 0; i < fit.radii.size(); ++i) {
    ecsv << fmt17(fit.radii[i]) << ',' << fmt17(fit.m[i]) << ',' << fit.samples[i] << '\n';
  }
  write_text((out / "exponent_fit.csv").string(), ecsv.str());

  // Stability: dropping the largest radius must not lower the slope by more than the band.
  json stability = nullptr;
  if (fit.radii.size() >= 5) {
    const std::vector<double> inner(fit.radii.begin() + 1, fit.radii.end());
    const ExponentFit f2 = holder_exponent(sol.u, sol.phi, y0, inner, sol.tol_contact);
    stability = {{"alpha_inner", f2.alpha}, {"holds", f2.alpha >= fit.alpha - fit.band}};
  }

  const GrowthSummary gs = growth_check(sol.u, sol.phi, w, y0, heights, sol.tol_contact);
  std::ostringstream gcsv;
  gcsv << "h,kappa,s,ratio,exact_contact,min_u_minus_l\n";
  bool lower_ok = true;
  for (const auto& r : gs.reports) {
    lower_ok = lower_ok && r.lower_bound_holds;
    gcsv << fmt17(r.h) << ',' << fmt17(r.kappa) << ',' << fmt17(r.s) << ',' << fmt17(r.ratio) << ','
         << int(r.exact_contact) << ',' << fmt17(r.min_u_minus_l) << '\n';
  }
  write_text((out / "growth.csv").string(), gcsv.str());

  const std::vector<PairSample> pairs = sample_pairs(s, fb, npairs, pair_radius);
  const ModulusReport mod = two_case_modulus(sol.u, sol.phi, pairs, fb.points, gamma, sol.tol_contact);
  std::ostringstream pcsv;
  pcsv << "x1,y1,x2,y2,case,d1,d2,ratio,chain\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pr = mod.pairs[i];
    pcsv << fmt17(pairs[i].y1.x()) << ',' << fmt17(pairs[i].y1.y()) << ',' << fmt17(pairs[i].y2.x()) << ','
         << fmt17(pairs[i].y2.y()) << ',' << pr.case_id << ',' << fmt17(pr.d1) << ',' << fmt17(pr.d2) << ','
         << fmt17(pr.ratio) << ',' << fmt17(pr.chain) << '\n';
  }
  write_text((out / "pairs.csv").string(), pcsv.str());

  const RescaledProblem rp = rescale_problem(w, sol.u, sol.phi, y0, rescale_h);
  const SolutionGradient sg(sol.u, sol.phi, sol.tol_contact);
  const GradientField du(sol.u);
  const auto g_u = du.at(s.dim == 1 ? Point(y0.x(), 0.0) : y0);
  const auto g_phi = sg.obstacle_gradient(s.dim == 1 ? Point(y0.x(), 0.0) : y0);
  json fb_match = nullptr;
  if (g_u && g_phi) fb_match = (*g_u - *g_phi).norm();

  return {{"anchor", {y0.x(), y0.y()}},
          {"alpha_hat", fit.alpha},
          {"alpha_se", fit.alpha_se},
          {"alpha_band", fit.band},
          {"fit_rms", fit.rms},
          {"radii_used", fit.radii.size()},
          {"alpha_theory", (1 - 5 * theta) / (1 + theta)},
          {"theta", theta},
          {"gamma", gamma},
          {"exponent_stability", stability},
          {"seminorms", {{"case1", mod.case1_max}, {"case2", mod.case2_max}}},
          {"pair_counts", {{"case1", mod.case1_count}, {"case2", mod.case2_count}, {"skipped_contact", mod.skipped_contact},
                           {"skipped_undefined", mod.skipped_undefined}}},
          {"chain_max", mod.chain_max},
          {"chain_bound", 3 * std::pow(3.0, gamma)},
          {"chain_holds", mod.chain_holds},
          {"growth_C", gs.c_empirical},
          {"growth_ratio_spread", gs.ratio_spread},
          {"growth_lower_bound_holds", lower_ok},
          {"free_boundary_gradient_mismatch", fb_match},
          {"rescale", {{"h", rescale_h}, {"K", rp.k}, {"y0", {rp.y0.x(), rp.y0.y()}}, {"min_gap", rp.min_gap},
                       {"det_ratio_deviation", rp.det_ratio_deviation}}}};
}

}  // namespace detail

/// Validates `config` against `schema`, runs the pipeline, writes artifacts
/// to the output directory and returns the process exit code: 0 success,
/// 2 schema violation, 3 solver failure, 1 anything else. Diagnostics go
/// to `log`.
inline int run_experiment(const nlohmann::json& schema, nlohmann::json config, const RunOptions& opt, std::ostream& log) {
  using nlohmann::json;
  namespace fs = std::filesystem;
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream sink;
  std::ostream& vlog = opt.verbose ? log : sink;
  try {
    if (!opt.pipeline.empty()) {
      if (config.contains("pipeline") && config["pipeline"] != opt.pipeline) {
        throw SchemaError("pipeline", "config says " + config["pipeline"].dump() + " but the subcommand is " + opt.pipeline);
      }
      config["pipeline"] = opt.pipeline;
    }
    if (opt.seed) config["seed"] = *opt.seed;
    SchemaValidator(schema).validate(config);
    if (!config.contains("pipeline")) throw SchemaError("pipeline", "no pipeline given by subcommand or config");

    detail::Setup s;
    s.config = config;
    s.pipeline = config["pipeline"].get<std::string>();
    s.seed = config.value("seed", std::uint64_t{0});
    s.domain = detail::parse_domain(config["domain"]);
    s.dim = s.domain.dimension();
    s.grid = Grid::covering(s.domain, config["grid"]["h"].get<double>());
    const std::string out_dir = !opt.out_dir.empty() ? opt.out_dir : config.value("output", std::string());
    if (out_dir.empty()) throw SchemaError("output", "no output directory given by --out or config");
    const fs::path out(out_dir);
    fs::create_directories(out);

    json report = {{"pipeline", s.pipeline},
                   {"config_hash", hex64(fnv1a(config.dump()))},
                   {"seed", s.seed},
                   {"versions", {{"lmo", kLmoVersion},
                                 {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                               std::to_string(EIGEN_MINOR_VERSION)},
                                 {"compiler", __VERSION__}}},
                   {"grid", {{"h", s.grid->spacing()}, {"interior_nodes", s.grid->count(NodeTag::kInterior)}}}};
    vlog << "pipeline " << s.pipeline << " on " << s.grid->count(NodeTag::kInterior) << " interior nodes\n";

    detail::Potential pot = detail::potential(s, vlog);
    report["potential"] = pot.report;
    const ScalarField& w = pot.w;

    if (s.pipeline == "solve-ma") {
      write_scalar_field((out / "w").string(), w);
    } else if (s.pipeline == "probe-sections") {
      report["sections"] = detail::probe_sections(s, w, out);
    } else if (s.pipeline == "probe-harnack") {
      report["harnack"] = detail::probe_harnack(s, w, out, vlog);
    } else if (s.pipeline == "probe-normalization") {
      report["normalization"] = detail::probe_normalization(s, w, out);
    } else {
      detail::ObstacleRun run = detail::solve_obstacle(s, w, vlog);
      report["obstacle"] = run.report;
      std::optional<FreeBoundary> fb;
      if (run.sol.contact_count() > 0) fb = free_boundary(run.sol);
      report["obstacle"]["free_boundary_points"] = fb ? fb->points.size() : 0;
      detail::write_obstacle_outputs(out, run.sol, fb ? &*fb : nullptr);
      if (s.pipeline == "probe-holder" || s.pipeline == "full-pipeline") {
        if (!fb) throw EmptyFreeBoundary("contact set is empty");
        report["holder"] = detail::probe_holder(s, w, run.sol, *fb, out);
      }
      if (s.pipeline == "full-pipeline") {
        write_scalar_field((out / "w").string(), w);
        if (s.config.contains("sections")) report["sections"] = detail::probe_sections(s, w, out);
      }
    }
    report["tolerances"] = s.tolerances;
    log << "tolerances " << s.tolerances.dump() << '\n';
    report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text((out / "report.json").string(), report.dump(2) + "\n");
    return 0;
  } catch (const SchemaError& e) {
    log << "schema error at " << (e.path().empty() ? "<root>" : e.path()) << ": " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    log << "solver failure: " << e.name() << ": " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace lmo
