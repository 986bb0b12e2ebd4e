#include <algorithm>
#include <cstdio>
#include <exception>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "cpflow/experiments.hpp"
#include "cpflow/scenarios.hpp"

namespace {

void add_run_options(CLI::App* sub, cpflow::RunConfig* config) {
  sub->add_option("--scenario", config->scenario, "registered scenario name")->required();
  sub->add_option("--kind", config->kind,
                  "strong|weak|rates|chaos|invariant|clt|donsker|stable|nse|fluctuation")
      ->required();
  sub->add_option("--eps", config->eps_grid, "comma-separated eps grid")->delimiter(',');
  sub->add_option("--n", config->n_grid, "comma-separated particle counts")->delimiter(',');
  sub->add_option("--replicas", config->replicas, "Monte-Carlo replicas (0 = scenario default)");
  sub->add_option("--seed", config->seed, "root RNG seed");
  sub->add_option("--workers", config->workers, "worker threads (0 = hardware)")
      ->envname("CPFLOW_WORKERS");
  sub->add_option("--out", config->out_dir, "output directory");
  sub->add_flag("--check", config->check, "exit nonzero when a threshold verdict fails");
  sub->fallthrough();  // lets --config after the subcommand reach the main app
}

int run_with(cpflow::RunConfig config, bool fit_slope) {
  const auto names = cpflow::scenario_names();
  if (std::find(names.begin(), names.end(), config.scenario) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    std::fprintf(stderr, "unknown scenario '%s'; registered: %s\n", config.scenario.c_str(),
                 list.c_str());
    return 2;
  }
  config.fit_slope = fit_slope;
  const auto result = cpflow::run_experiment(config);
  cpflow::write_outputs(result, config);
  for (const auto& line : result.summary) std::printf("%s\n", line.c_str());
  for (const auto& warning : result.report.warnings)
    std::printf("warning: %s\n", warning.c_str());
  std::printf("wrote %s/results.csv (%zu rows), status %s\n", config.out_dir.c_str(),
              result.report.rows.size(), result.pass ? "pass" : "fail");
  return (config.check && !result.pass) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compound-Poisson flow experiments"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "TOML config file ([run]/[rates] section per subcommand); "
                 "command-line flags override");

  cpflow::RunConfig run_config, rates_config;
  CLI::App* run = app.add_subcommand("run", "run one experiment and write its report");
  add_run_options(run, &run_config);
  CLI::App* rates = app.add_subcommand("rates", "convergence-rate sweep with a slope verdict");
  add_run_options(rates, &rates_config);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_with(run_config, false);
    return run_with(rates_config, true);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
