#ifndef CPFLOW_NSE2D_HPP
#define CPFLOW_NSE2D_HPP

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "cpflow/rng.hpp"

namespace cpflow {

// Scalar periodic field on the uniform G x G grid of [-pi,pi]^2,
// v[i*G + j] = w(x1_i, x2_j) with x_i = -pi + 2*pi*i/G. Row-major.
struct VorticityField {
  int G = 0;
  std::vector<double> v;

  double& at(int i, int j) { return v[std::size_t(i) * G + j]; }
  double at(int i, int j) const { return v[std::size_t(i) * G + j]; }
  double sup_norm() const;
  double mean() const;
  // periodic bilinear interpolation; x may lie outside [-pi,pi]^2
  double interpolate(double x1, double x2) const;
};

// Velocity on the same grid, two components.
struct VelocityField {
  int G = 0;
  std::vector<double> u1, u2;

  double sup_norm() const;
  std::array<double, 2> interpolate(double x1, double x2) const;
};

VorticityField make_vorticity(int G, const std::function<double(double, double)>& f);

// u = K2 * w by spectral inversion: u_hat(k) = i k_perp w_hat(k) / |k|^2,
// k_perp = (-k2, k1), mean mode projected to zero. Requires G >= 8.
VelocityField biot_savart(const VorticityField& w);

// max_k |k . u_hat(k)| / max_k |u_hat(k)| (0 for the zero field)
double divergence_residual(const VelocityField& u);

// Regression guard for ||K2*w||_inf <= C ||w||_inf; C calibrated once on a
// random band-limited corpus (Taylor-Green sits at ratio 0.5).
bool sup_norm_bound_check(const VorticityField& w, double C = 1.5);

// Spectral resampling (zero padding / truncation) to a G_fine grid.
VorticityField refine_spectral(const VorticityField& w, int G_fine);
VelocityField refine_spectral(const VelocityField& u, int G_fine);

// Pseudo-spectral solver for the backward vorticity equation
//   d_s w + nu Laplace w + (K2*w).grad w = 0,  w(T) = w0,
// run forward in remaining time with 2/3 dealiasing and RK4 on the
// integrating-factor form (viscous part exact). Returns w at each s in s_grid.
// Throws std::invalid_argument when dt violates the advective CFL bound.
std::vector<VorticityField> spectral_reference(const VorticityField& w0, double nu, double T,
                                               const std::vector<double>& s_grid, int G,
                                               double dt);

struct NseOptions {
  int max_iter = 12;
  bool antithetic = true;  // jump pairs (xi, -xi) sharing one clock
  int refine = 8;          // fields are spectrally upsampled by this factor
                           // before bilinear interpolation along paths
  unsigned workers = 1;
  std::size_t path_offset = 0;  // shift of the path (or pair) label index;
                                // disjoint offsets give independent half-samples
  // Zero-drift control variate: each path also tracks its noise-only position
  // x + D (same clock and jumps, no drift). E w0(x + D) is exact mode-wise
  // (decay exp((T-s)(phi(hk)-1)/eps), phi(k) = (cos k1 + cos k2)/2), so the
  // estimator mean[w0(X) - w0(x+D)] + E w0(x+D) is unbiased with the
  // first-order noise dependence removed.
  bool control_variate = true;
};

// One transport sweep: for every grid point x and slice s_j, the Monte-Carlo
// mean of w0(X_{s_j,T}(x)) over M paths, where X ticks at Poisson(1/eps) times
// by eps*u(r,X-) + 2*sqrt(eps*nu)*xi with xi uniform on {+-e1,+-e2} and u the
// given frozen velocity, piecewise constant on s_grid (left endpoint). The
// noise factor 2*sqrt(eps*nu) makes the small-eps generator u.grad + nu*Laplace
// (axis jumps have per-component variance 1/2). u_slices empty means u = 0.
// Stream labels per (point, slice, path) depend only on the root stream, so
// repeated calls with the same stream are bit-identical.
std::vector<VorticityField> mc_transport(const VorticityField& w0,
                                         const std::vector<VelocityField>& u_slices, double nu,
                                         double eps, double T, const std::vector<double>& s_grid,
                                         std::size_t M, const RngStream& stream,
                                         const NseOptions& options = {});

// Generator of one scheme tick against a smooth test function:
//   (1/eps) E[f(x + eps*u + 2*sqrt(eps*nu)*xi) - f(x)]
double scheme_generator(const std::function<double(double, double)>& f, double nu, double eps,
                        const std::array<double, 2>& u, double x1, double x2);

struct NseSolution {
  std::vector<double> s_grid;
  std::vector<VorticityField> w;  // per slice
  std::vector<VelocityField> u;
  std::vector<double> gap_history;  // Picard sup-gaps in u per sweep
  int sweeps = 0;
};

// Picard iteration on the self-consistent system: sweep n runs mc_transport
// against u_{n-1} (u_{-1} = 0) with common random numbers across sweeps, then
// u_n = biot_savart(w_n). Stops when the u sup-gap drops below picard_tol or
// after max_iter sweeps; throws non_convergence_error when the gap fails to
// decrease for 3 consecutive sweeps.
NseSolution solve_nse_poisson(const VorticityField& w0, double nu, double eps, double T,
                              const std::vector<double>& s_grid, std::size_t M, double picard_tol,
                              const RngStream& stream, const NseOptions& options = {});

// CSV matrix I/O: header line "G,s,component", one value line, then G rows of
// G comma-separated values per component.
void write_field_csv(const std::string& path, const VorticityField& w, double s);
void write_field_csv(const std::string& path, const VelocityField& u, double s);
std::pair<VorticityField, double> read_vorticity_csv(const std::string& path);

}  // namespace cpflow

#endif
