#ifndef CPFLOW_REFERENCE_HPP
#define CPFLOW_REFERENCE_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "cpflow/scheme.hpp"

namespace cpflow {

// Deterministic solution oracle, independent of the stochastic scheme.
struct ReferencePath {
  enum class Method { kRk4, kMollified, kClosedForm };

  std::vector<double> grid;    // strictly increasing, starts at 0
  std::vector<Vec> states;
  std::vector<Vec> derivs;     // drift at the nodes; enables cubic dense output
  Method method = Method::kRk4;
  double accuracy = 0.0;       // estimated sup error (0 = exact/unknown-exact)

  // Dense output: cubic Hermite between nodes when derivatives are stored,
  // linear otherwise. Throws std::out_of_range outside [grid.front(), grid.back()].
  Vec evaluate(double t) const;
};

using DriftFn = std::function<Vec(double t, const Vec& x)>;

// Classical fixed-step RK4. Throws divergence_error on a non-finite state.
ReferencePath rk4_solve(const DriftFn& b, const Vec& x0, double T, double h);

// Filippov oracle for (possibly discontinuous) one-sided Lipschitz drifts,
// 1-D state. If closed_form is supplied it is sampled directly; otherwise the
// drift is mollified with a Gaussian kernel at each delta in delta_grid
// (64-point Gauss-Hermite), solved by RK4, and the finest-delta path is
// returned with the Cauchy gap between the last two deltas as accuracy.
// not_contracting is set when the gap fails to decrease (warning, not error).
ReferencePath filippov_solve(const DriftFn& b, const Vec& x0, double T, double h,
                             const std::vector<double>& delta_grid = {1e-1, 1e-2, 1e-3},
                             const std::function<Vec(double)>& closed_form = nullptr,
                             bool* not_contracting = nullptr);

// Ornstein-Uhlenbeck dX = -theta X dt + sigma dW: mean and variance at t.
std::pair<double, double> ou_exact(double theta, double sigma, double x0, double t);

}  // namespace cpflow

#endif
