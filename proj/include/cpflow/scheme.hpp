#ifndef CPFLOW_SCHEME_HPP
#define CPFLOW_SCHEME_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "cpflow/clock.hpp"
#include "cpflow/jump_law.hpp"
#include "cpflow/rng.hpp"

namespace cpflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Drift/diffusion pair with growth and taming metadata. The diffusion must be
// odd in z with sigma(t,x,0) = 0; scenario constructors are responsible for
// supplying coefficients that satisfy this.
struct CoefficientSet {
  int dim = 1;
  std::function<Vec(double t, const Vec& x)> drift;                // may be null (b = 0)
  std::function<Vec(double t, const Vec& x, const Vec& z)> diffusion;  // may be null
  double m = 1.0;               // growth exponent, >= 1
  bool taming_enabled = false;  // default on for m > 1, off for m = 1
  double alpha = 2.0;
  std::function<Mat(double t, const Vec& x)> drift_grad;  // optional, for jacobians
};

// Cadlag piecewise-constant trajectory: states[n] is the post-jump value at
// times[n]; the path value on [times[n], times[n+1]) is states[n].
struct SchemePath {
  Vec x0;
  double eps = 0.0;
  double horizon = 0.0;
  std::vector<double> times;  // S_1 < S_2 < ... (S_0 = 0 implicit)
  std::vector<Vec> states;    // Gamma_1, Gamma_2, ...

  // Value at t (right-continuous); throws std::out_of_range beyond horizon.
  Vec evaluate(double t) const;
  // Left limit at the n-th event (1-based): Gamma_{n-1}.
  Vec left_limit(std::size_t n) const;
  std::size_t event_count() const { return times.size(); }
};

// eps * b / (1 + sqrt(eps) |b|^{1 - 1/m}); bounded by min(eps|b|, sqrt(eps)|b|^{1/m}).
// Throws std::invalid_argument for m < 1 or eps outside (0,1].
Vec tame_drift(const Vec& b_val, double m, double eps);

// Per-event drift increment: tamed form when taming is on, eps*b otherwise.
Vec drift_increment(const CoefficientSet& coeffs, double eps, double t, const Vec& x);

// alpha >= 2: sqrt(eps) * sigma(t,x,z); alpha < 2: sigma(t,x,eps^{1/alpha} z).
Vec scale_diffusion(const CoefficientSet& coeffs, double eps, double t, const Vec& x,
                    const Vec& z);

// One Markov-chain transition. Throws divergence_error (with event_index) on a
// non-finite or out-of-range result.
Vec step(double t_prev, const Vec& state, double s_next, const Vec& xi,
         const CoefficientSet& coeffs, double eps, std::size_t event_index = 0);

// Folds `step` over the events of a fresh clock on [0,T]; clock and jump
// sub-streams are derived from `stream`.
SchemePath simulate_path(const CoefficientSet& coeffs, const Vec& x0, double eps, double T,
                         const JumpLaw& law, const RngStream& stream);

// Discrete generator: sum_z [f(x + sigma_eps + b_eps) - f(x)] p(z) / eps, the
// exact finite sum over the law's atoms.
double generator_apply(const std::function<double(const Vec&)>& f, double t, const Vec& x,
                       const CoefficientSet& coeffs, const JumpLaw& law, double eps);

struct JacobianReport {
  std::vector<double> determinants;  // det J_n, n = 1..event_count
  bool singular = false;             // some det fell below 1e-12
};

// Replays a path's events through J_{n+1} = (I + eps * grad_b(S_{n+1}, Gamma_n)) J_n.
// Requires coeffs.drift_grad and untamed drift (the tamed gradient is not
// supplied analytically); throws std::logic_error otherwise.
JacobianReport path_jacobian(const SchemePath& path, const CoefficientSet& coeffs);

}  // namespace cpflow

#endif
