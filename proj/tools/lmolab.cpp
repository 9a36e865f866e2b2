#include "lmo/experiment/embedded_schema.hpp"
#include "lmo/experiment/runner.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"lmolab: Monge-Ampere, linearized operator and obstacle experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool verbose = false;
  app.add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory; overrides the config's \"output\"");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed; overrides the config's \"seed\"");
  app.add_flag("--verbose,-v", verbose, "log solver progress to stderr");

  const std::vector<std::pair<std::string, std::string>> pipelines{
      {"solve-ma", "solve the Dirichlet Monge-Ampere problem and write w"},
      {"solve-obstacle", "solve the obstacle problem for L_w and write u, contact set and free boundary"},
      {"probe-sections", "section radii, ball inclusions and engulfing"},
      {"probe-harnack", "Harnack quotients on a section for random positive data"},
      {"probe-normalization", "iterated section normalization and the decay of delta_k"},
      {"probe-holder", "gradient Holder exponent, growth and two-case modulus at the free boundary"},
      {"full-pipeline", "solve-ma, solve-obstacle and probe-holder in one run"},
  };
  for (const auto& [name, help] : pipelines) app.add_subcommand(name, help)->fallthrough();

  CLI11_PARSE(app, argc, argv);

  lmo::RunOptions opt;
  opt.pipeline = app.get_subcommands().front()->get_name();
  opt.out_dir = out_dir;
  opt.verbose = verbose;
  if (seed_opt->count() > 0) opt.seed = seed;

  nlohmann::json config;
  try {
    std::ifstream in(config_path);
    config = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "schema error at <root>: config is not valid JSON: " << e.what() << '\n';
    return 2;
  }
  return lmo::run_experiment(nlohmann::json::parse(lmo::kExperimentSchema), config, opt, std::cerr);
}
