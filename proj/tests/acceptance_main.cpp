// Acceptance harness: one pass/fail line per criterion, exit 0 iff all pass.
#include <cmath>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "cpflow/clock.hpp"
#include "cpflow/experiments.hpp"
#include "cpflow/pool.hpp"
#include "cpflow/rng.hpp"

using namespace cpflow;

namespace {

bool all_pass = true;

void report(int idx, const std::string& name, bool ok, const std::string& detail = "") {
  std::printf("criterion %2d %-38s %s%s%s\n", idx, name.c_str(), ok ? "PASS" : "FAIL",
              detail.empty() ? "" : "  ", detail.c_str());
  std::fflush(stdout);
  all_pass = all_pass && ok;
}

RunConfig base_config(const std::string& scenario, const std::string& kind) {
  RunConfig c;
  c.scenario = scenario;
  c.kind = kind;
  c.seed = 2026;
  c.workers = 1;
  return c;
}

// Runs the config and additionally re-runs it with a different worker count;
// returns {result, bytes identical}.
std::pair<ExperimentResult, bool> run_checked(RunConfig config) {
  const ExperimentResult result = run_experiment(config);
  RunConfig alt = config;
  alt.workers = 3;
  const ExperimentResult rerun = run_experiment(alt);
  return {result, results_csv(result.report) == results_csv(rerun.report)};
}

std::string first_line(const ExperimentResult& r) {
  return r.summary.empty() ? "" : r.summary.front();
}

}  // namespace

int main() {
  bool deterministic = true;
  try {
    {
      auto cfg = base_config("oscillatory", "strong");
      cfg.eps_grid = {1e-4};
      cfg.replicas = 2000;
      auto [r, same] = run_checked(cfg);
      report(1, "oscillatory isometry", r.pass, first_line(r));
      deterministic = deterministic && same;
    }
    {
      auto cfg = base_config("lipschitz_1d", "strong");
      cfg.replicas = 500;
      cfg.fit_slope = true;
      auto [r, same] = run_checked(cfg);
      report(2, "strong rate 1/2 (lipschitz drift)", r.pass,
             r.summary.empty() ? "" : r.summary.front());
      deterministic = deterministic && same;
    }
    {
      auto cfg = base_config("linear_ou", "weak");
      cfg.fit_slope = true;
      auto [r, same] = run_checked(cfg);
      report(3, "weak rate 1 (x^2 moment)", r.pass,
             r.summary.size() > 4 ? r.summary[4] : "");
      deterministic = deterministic && same;
    }
    {
      auto cfg = base_config("filippov_sign", "strong");
      cfg.replicas = 500;
      cfg.fit_slope = true;
      auto [r, same] = run_checked(cfg);
      report(4, "filippov rate (sign drift)", r.pass, first_line(r));
      deterministic = deterministic && same;
    }
    {
      auto cfg = base_config("linear_ou", "donsker");
      cfg.eps_grid = {1e-3};
      cfg.replicas = 5000;
      auto [r, same] = run_checked(cfg);
      report(5, "donsker normal limit", r.pass, first_line(r));
      deterministic = deterministic && same;
    }
    {
      auto cfg = base_config("stable_drift", "stable");
      auto [r, same] = run_checked(cfg);
      report(6, "stable-driven distribution", r.pass);
      deterministic = deterministic && same;
    }
    {
      auto cfg = base_config("mckean_sin", "chaos");
      cfg.fit_slope = true;
      const auto r = run_experiment(cfg);
      report(7, "propagation of chaos", r.pass, first_line(r));
      auto small = cfg;  // determinism re-run at reduced scale (runtime)
      small.fit_slope = false;
      small.n_grid = {8, 16, 32};
      small.replicas = 8;
      deterministic = deterministic && run_checked(small).second;
    }
    {
      auto cfg = base_config("mckean_sin", "fluctuation");
      const auto r = run_experiment(cfg);
      report(8, "fluctuation CLT", r.pass, first_line(r));
      auto small = cfg;
      small.n_grid = {32};
      small.replicas = 16;
      deterministic = deterministic && run_checked(small).second;
    }
    {
      auto cfg = base_config("linear_ou", "invariant");
      cfg.eps_grid = {1e-2};
      cfg.replicas = 16;
      auto [r, same] = run_checked(cfg);
      report(9, "invariant measure time-average", r.pass, first_line(r));
      deterministic = deterministic && same;
    }
    {
      auto cfg = base_config("linear_ou", "clt");
      cfg.eps_grid = {1e-3};
      cfg.replicas = 2000;
      auto [r, same] = run_checked(cfg);
      report(10, "path-scale CLT variance", r.pass, first_line(r));
      deterministic = deterministic && same;
    }
    {
      auto cfg = base_config("taylor_green", "nse");
      const auto r = run_experiment(cfg);
      report(11, "navier-stokes rate shape", r.pass);
      for (const auto& line : r.summary) std::printf("    %s\n", line.c_str());
      auto small = cfg;
      small.eps_grid = {0.02};
      small.replicas = 200;
      deterministic = deterministic && run_checked(small).second;
    }
    {
      // event budget: P(N^eps_1 >= ceil((e-1)/eps) + 5) <= e^-5 (+ 3 SE)
      const double eps = 1e-2;
      const std::size_t M = 100000;
      const std::size_t budget = required_iterations(eps, 1.0, 5);
      auto tail_fraction = [&](unsigned workers) {
        std::vector<StreamLabel> labels{{StreamLabel::kPurpose, 12}};
        const RngStream base(2026u, labels);
        std::vector<double> hit(M);
        parallel_for_indexed(M, workers, [&](std::size_t r) {
          RngStream rs = base.derive({StreamLabel::kReplica, r});
          hit[r] = build_clock(eps, 1.0, rs).count(1.0) >= budget ? 1.0 : 0.0;
        });
        double p = 0.0;
        for (double h : hit) p += h;
        return p / double(M);
      };
      const double p = tail_fraction(1);
      const double se = std::sqrt(p * (1.0 - p) / double(M));
      const bool ok = p <= std::exp(-5.0) + 3.0 * se;
      char detail[128];
      std::snprintf(detail, sizeof(detail), "P(N >= %zu) = %.3e, bound %.3e", budget, p,
                    std::exp(-5.0) + 3.0 * se);
      report(12, "event-count tail bound", ok, detail);
      deterministic = deterministic && tail_fraction(3) == p;
    }
    report(13, "determinism across worker counts", deterministic);
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("acceptance: %s\n", all_pass ? "all criteria pass" : "FAILURES present");
  return all_pass ? 0 : 1;
}
