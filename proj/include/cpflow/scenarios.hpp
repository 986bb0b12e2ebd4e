#ifndef CPFLOW_SCENARIOS_HPP
#define CPFLOW_SCENARIOS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cpflow/jump_law.hpp"
#include "cpflow/mckean.hpp"
#include "cpflow/scheme.hpp"

namespace cpflow {

// Named coefficient set with the constants, default grids and exact solutions
// the experiment drivers need. Entries are immutable after registration.
struct ScenarioSpec {
  std::string name;
  std::string summary;
  bool qualitative = false;  // demo scenario: trend checks only, no exact rate

  // single-path dynamics (ODE/SDE scenarios)
  std::optional<CoefficientSet> coeffs;
  std::optional<JumpLaw> law;  // noise law when a diffusion is present

  // interacting-particle dynamics
  std::optional<KernelSet> kernel;

  // vorticity dynamics
  std::function<double(double, double)> w0;
  double nu = 0.0;
  int grid = 32;

  // constants used by error bounds and drivers
  double kappa = 0.0;            // Lipschitz (or one-sided) drift bound
  double b_sup = 0.0;            // sup |b| when finite, else 0
  double f_square_integral = 0;  // oscillatory scenario: int_0^T f^2

  // defaults for the CLI and the acceptance harness
  double T = 1.0;
  double x0 = 1.0;
  std::vector<double> default_eps;
  std::vector<std::size_t> default_n;
  std::size_t default_replicas = 500;
  double rate_lo = 0.0, rate_hi = 0.0;  // target slope window for `rates`

  // closed forms, when they exist
  std::function<double(double t, double x0)> exact_path;
  std::function<double(double s, double x1, double x2)> exact_vorticity;
  std::function<std::array<double, 2>(double s, double x1, double x2)> exact_velocity;

  // i.i.d. initial condition for particle systems
  std::function<double(RngStream&)> init_sampler;

  // max |residual| of the closed form in its defining equation over 100
  // seeded sample points; null when no closed form is registered
  std::function<double()> residual_check;

  std::uint64_t hash = 0;  // stable fingerprint recorded in report rows
};

// Registered scenario by name; throws std::invalid_argument listing the
// registry for unknown names.
const ScenarioSpec& get_scenario(const std::string& name);
std::vector<std::string> scenario_names();

// square wave of the oscillatory scenario: (1 - 2(floor(200 s) mod 2)) * 100
double oscillatory_f(double s);

// Box-Muller standard normal draw (two uniforms per call)
double standard_normal(RngStream& stream);

}  // namespace cpflow

#endif
