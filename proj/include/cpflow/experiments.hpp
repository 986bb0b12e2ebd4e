#ifndef CPFLOW_EXPERIMENTS_HPP
#define CPFLOW_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cpflow/stats.hpp"

namespace cpflow {

// Configuration of one experiment run; empty grids / zero replicas fall back
// to the scenario defaults.
struct RunConfig {
  std::string scenario;
  std::string kind;  // strong|weak|rates|chaos|invariant|clt|donsker|stable|nse|fluctuation
  std::vector<double> eps_grid;
  std::vector<std::size_t> n_grid;
  std::size_t replicas = 0;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string out_dir = ".";
  bool check = false;      // fail the run when a threshold verdict fails
  bool fit_slope = false;  // `rates`: require >= 3 grid points and a slope verdict
};

struct ExperimentResult {
  ErrorReport report;
  std::vector<std::string> summary;  // lines written to summary.txt
  bool pass = true;                  // all verdicts that apply to this kind
};

// Runs the experiment described by config. Throws std::invalid_argument on a
// bad config (unknown scenario/kind, unusable grid); simulation-level errors
// (divergence_error, non_convergence_error) propagate.
ExperimentResult run_experiment(const RunConfig& config);

// results.csv bytes for a report (deterministic formatting, %.17g).
std::string results_csv(const ErrorReport& report);

// Writes results.csv, summary.txt and plot_<metric>.dat into config.out_dir.
void write_outputs(const ExperimentResult& result, const RunConfig& config);

}  // namespace cpflow

#endif
