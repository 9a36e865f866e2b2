#include "lmo/experiment/embedded_schema.hpp"
#include "lmo/experiment/expression.hpp"
#include "lmo/experiment/runner.hpp"
#include "lmo/experiment/schema.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace lmo {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

TEST(Expression, ArithmeticAndPrecedence) {
  EXPECT_DOUBLE_EQ(Expression("1 + 2 * 3")(Point::Zero()), 7.0);
  EXPECT_DOUBLE_EQ(Expression("(1 + 2) * 3")(Point::Zero()), 9.0);
  EXPECT_DOUBLE_EQ(Expression("2 ^ 3 ^ 2")(Point::Zero()), 512.0);
  EXPECT_DOUBLE_EQ(Expression("-2 ^ 2")(Point::Zero()), -4.0);
  EXPECT_DOUBLE_EQ(Expression("8 / 4 / 2")(Point::Zero()), 1.0);
  EXPECT_DOUBLE_EQ(Expression("1e-3 * 2")(Point::Zero()), 2e-3);
}

TEST(Expression, VariablesAndFunctions) {
  const Point p(0.3, -0.4);
  EXPECT_DOUBLE_EQ(Expression("r")(p), 0.5);
  EXPECT_DOUBLE_EQ(Expression("0.5 - r^2")(p), 0.25);
  EXPECT_DOUBLE_EQ(Expression("x * y")(p), 0.3 * -0.4);
  EXPECT_DOUBLE_EQ(Expression("atan2(y, x)")(p), std::atan2(-0.4, 0.3));
  EXPECT_DOUBLE_EQ(Expression("max(x, y) + min(x, y)")(p), 0.3 - 0.4);
  EXPECT_DOUBLE_EQ(Expression("exp(log(2))")(p), 2.0);
  EXPECT_DOUBLE_EQ(Expression("cos(pi)")(p), -1.0);
  EXPECT_DOUBLE_EQ(Expression("sqrt(abs(-e * e))")(p), std::numbers::e);
}

TEST(Expression, ErrorsAreInvalidInput) {
  for (const char* bad : {"", "1 +", "(x", "foo", "sin(x, y)", "bar(1)", "x $ y", "max(1)"}) {
    EXPECT_THROW(Expression{bad}, InvalidInput) << bad;
  }
}

json schema() { return json::parse(kExperimentSchema); }

json minimal() {
  return json::parse(R"({"domain": {"kind": "ball", "radius": 1}, "grid": {"h": 0.125}})");
}

std::string violation(const json& config) {
  try {
    SchemaValidator(schema()).validate(config);
  } catch (const SchemaError& e) {
    return e.path();
  }
  return "<valid>";
}

TEST(SchemaValidator, AcceptsShippedConfigs) {
  for (const auto& e : fs::directory_iterator(LMO_CONFIG_DIR)) {
    if (e.path().extension() != ".json" || e.path().filename() == "bad_unknown_key.json") continue;
    std::ifstream in(e.path());
    EXPECT_EQ(violation(json::parse(in)), "<valid>") << e.path();
  }
}

TEST(SchemaValidator, ReportsDottedPaths) {
  std::ifstream in(std::string(LMO_CONFIG_DIR) + "/bad_unknown_key.json");
  EXPECT_EQ(violation(json::parse(in)), "solver.omga");

  json c = minimal();
  EXPECT_EQ(violation(c), "<valid>");
  c.erase("grid");
  EXPECT_EQ(violation(c), "grid");

  c = minimal();
  c["grid"]["h"] = 0;
  EXPECT_EQ(violation(c), "grid.h");

  c = minimal();
  c["solver"] = {{"omega", 2.0}};
  EXPECT_EQ(violation(c), "solver.omega");

  c = minimal();
  c["sections"] = {{"heights", {0.1, -0.2, 0.3}}};
  EXPECT_EQ(violation(c), "sections.heights[1]");

  c = minimal();
  c["domain"]["kind"] = "square";
  EXPECT_EQ(violation(c), "domain.kind");

  c = minimal();
  c["holder"] = {{"radii", {0.1, 0.05, 0.025}}};
  EXPECT_EQ(violation(c), "holder.radii");

  c = minimal();
  c["normalization"] = {{"k_max", 1.5}};
  EXPECT_EQ(violation(c), "normalization.k_max");

  c = minimal();
  c["domain"]["vertices"] = {{0, 0}, {1, 0}, {0, 1, 2}};
  EXPECT_EQ(violation(c), "domain.vertices[2]");
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(hex64(0xabcull), "0000000000000abc");
}

class RunExperiment : public ::testing::Test {
 protected:
  fs::path out = fs::temp_directory_path() / ("lmo_run_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                              "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
  void SetUp() override { fs::remove_all(out); }
  void TearDown() override { fs::remove_all(out); }

  int run(const json& config, const std::string& pipeline, std::string* log = nullptr) {
    RunOptions opt;
    opt.pipeline = pipeline;
    opt.out_dir = out.string();
    std::ostringstream sink;
    const int code = run_experiment(schema(), config, opt, sink);
    if (log) *log = sink.str();
    return code;
  }

  json report() const {
    std::ifstream in(out / "report.json");
    return json::parse(in);
  }
};

TEST_F(RunExperiment, SolveMaWritesFieldAndReport) {
  json c = minimal();
  c["f"] = {{"kind", "constant"}, {"value", 1}};
  std::string log;
  ASSERT_EQ(run(c, "solve-ma", &log), 0) << log;
  EXPECT_TRUE(fs::exists(out / "w.csv"));
  EXPECT_TRUE(fs::exists(out / "w.json"));
  const json r = report();
  EXPECT_EQ(r["pipeline"], "solve-ma");
  EXPECT_EQ(r["seed"], 0);
  EXPECT_EQ(r["config_hash"].get<std::string>().size(), 16u);
  EXPECT_LE(r["potential"]["max_residual"].get<double>(), 1e-8);
  EXPECT_TRUE(r["tolerances"].contains("tol_ma"));
  EXPECT_NE(log.find("tolerances"), std::string::npos);
}

TEST_F(RunExperiment, SchemaErrorsExitTwoWithPath) {
  json c = minimal();
  c["solver"] = {{"omga", 1.5}};
  std::string log;
  EXPECT_EQ(run(c, "solve-ma", &log), 2);
  EXPECT_NE(log.find("solver.omga"), std::string::npos) << log;

  c = minimal();
  c["pipeline"] = "solve-ma";
  EXPECT_EQ(run(c, "probe-sections", &log), 2);
  EXPECT_NE(log.find("at pipeline"), std::string::npos) << log;

  // A potential from MA needs a density.
  EXPECT_EQ(run(minimal(), "solve-ma", &log), 2);
  EXPECT_NE(log.find("at f"), std::string::npos) << log;

  c = minimal();
  c["w_source"] = {{"kind", "analytic"}, {"expression", "x^2 +"}};
  EXPECT_EQ(run(c, "probe-sections", &log), 2);
  EXPECT_NE(log.find("w_source.expression"), std::string::npos) << log;
}

TEST_F(RunExperiment, SolverFailuresExitThreeWithErrorName) {
  json c = minimal();
  c["w_source"] = {{"kind", "analytic"}, {"expression", "(x^2 + y^2) / 2"}};
  c["obstacle"] = "-1";
  std::string log;
  EXPECT_EQ(run(c, "probe-holder", &log), 3);
  EXPECT_NE(log.find("EmptyFreeBoundary"), std::string::npos) << log;
}

TEST_F(RunExperiment, ObstacleArtifactsAreConsistent) {
  json c = minimal();
  c["grid"]["h"] = 1.0 / 32;
  c["w_source"] = {{"kind", "analytic"}, {"expression", "(x^2 + y^2) / 2"}};
  c["obstacle"] = "0.5 - r^2";
  ASSERT_EQ(run(c, "solve-obstacle"), 0);
  std::ifstream mask(out / "contact_mask.csv");
  std::string line;
  std::getline(mask, line);
  EXPECT_EQ(line, "x,y,contact");
  int contact = 0;
  while (std::getline(mask, line)) contact += line.back() == '1';
  const json r = report();
  EXPECT_EQ(contact, r["obstacle"]["contact_nodes"].get<int>());
  EXPECT_GT(r["obstacle"]["free_boundary_points"].get<int>(), 0);
  EXPECT_LE(r["obstacle"]["residual"].get<double>(), 1e-8);
}

TEST_F(RunExperiment, PerronMatchesActiveSetThroughTheRunner) {
  json c = minimal();
  c["grid"]["h"] = 1.0 / 16;
  c["w_source"] = {{"kind", "analytic"}, {"expression", "(x^2 + 2 * y^2) / 2"}};
  c["obstacle"] = "0.3 - r^2";
  c["solver"] = {{"method", "activeset"}};
  ASSERT_EQ(run(c, "solve-obstacle"), 0);
  const ScalarField a = read_scalar_field((out / "u.csv").string(), (out / "u.json").string());
  c["solver"] = {{"method", "perron"}, {"perron_change_tol", 1e-12}};
  ASSERT_EQ(run(c, "solve-obstacle"), 0);
  const ScalarField b = read_scalar_field((out / "u.csv").string(), (out / "u.json").string());
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.grid().is_interior(i)) diff = std::max(diff, std::abs(a[i] - b[i]));
  }
  EXPECT_LE(diff, 1e-6);
}

TEST_F(RunExperiment, SeedChangesHashAndHarnackDraws) {
  json c = minimal();
  c["grid"]["h"] = 1.0 / 32;
  c["w_source"] = {{"kind", "analytic"}, {"expression", "(x^2 + y^2) / 2"}};
  c["harnack"] = {{"h", 0.0625}, {"draws", 3}};
  ASSERT_EQ(run(c, "probe-harnack"), 0);
  const json r0 = report();
  std::ifstream a(out / "harnack.csv");
  const std::string csv0((std::istreambuf_iterator<char>(a)), {});
  c["seed"] = 5;
  ASSERT_EQ(run(c, "probe-harnack"), 0);
  std::ifstream b(out / "harnack.csv");
  const std::string csv1((std::istreambuf_iterator<char>(b)), {});
  EXPECT_NE(r0["config_hash"], report()["config_hash"]);
  EXPECT_NE(csv0, csv1);
}

TEST_F(RunExperiment, NormalizationReportsFit) {
  json c = minimal();
  c["grid"]["h"] = 1.0 / 128;
  c["w_source"] = {{"kind", "analytic"}, {"expression", "(x^2 + y^2) / 2"}};
  c["normalization"] = {{"k_max", 3}};
  ASSERT_EQ(run(c, "probe-normalization"), 0);
  const json r = report()["normalization"];
  EXPECT_EQ(r["steps"], 3);
  EXPECT_LE(r["max_delta"].get<double>(), 1e-6);
  EXPECT_TRUE(r["contracting"].get<bool>());
  EXPECT_TRUE(fs::exists(out / "normalization.csv"));
}

}  // namespace
}  // namespace lmo
