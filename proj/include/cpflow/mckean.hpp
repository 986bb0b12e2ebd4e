#ifndef CPFLOW_MCKEAN_HPP
#define CPFLOW_MCKEAN_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "cpflow/jump_law.hpp"
#include "cpflow/rng.hpp"

namespace cpflow {

// Pairwise interaction coefficients for a 1-D particle system. The measure
// bracket b[t,x,mu] is the average of b(t,x,y) over y ~ mu; sigma is taken
// independent of the interaction variable (all shipped scenarios are additive
// in the noise).
struct KernelSet {
  std::function<double(double t, double x, double y)> b;
  std::function<double(double t, double x, double z)> sigma;  // null = drift-only
  double m = 1.0;
  bool taming_enabled = false;
  double alpha = 2.0;
  bool time_independent = true;  // b(t,x,y) does not actually use t
  double kappa = 0.0;            // declared bound/Lipschitz constant metadata

  // Optional fast measure reduction: ctx = reduce(t, support) summarizes the
  // measure so that apply(t, x, ctx) equals the average of b(t,x,.) over the
  // support. Used for limit-flow work; the particle loop stays naive.
  std::function<std::vector<double>(double t, const std::vector<double>& support)> reduce;
  std::function<double(double t, double x, const std::vector<double>& ctx)> apply;
};

// One particle tick: the particle's state after the event and the jump used.
struct ParticleEvent {
  double time;
  std::uint32_t particle;
  double state;  // post-event state of that particle
  double xi;     // lattice jump coordinate (0 for drift-only systems)
};

// Event log of the interacting system; per-particle clocks have intensity N
// (eps = 1/N). States between events are piecewise constant.
struct EnsembleTrajectory {
  std::size_t N = 0;
  double horizon = 0.0;
  std::vector<double> init;
  std::vector<ParticleEvent> events;  // time-sorted merge of all particle clocks

  std::vector<double> states_at(double t) const;
  std::vector<double> final_states() const { return states_at(horizon); }
  std::vector<std::size_t> per_particle_counts() const;
};

struct PicardOptions {
  std::size_t cloud_factor = 16;  // K = cloud_factor * N
  double rk4_h = 1.0 / 256.0;
  double picard_tol = 1e-8;
  int max_sweeps = 50;
};

// Limit measure flow mu_t of the mean-field equation, represented by a sample
// cloud evolved on a time grid. Built either from a closed-form mean-field
// drift or by Picard iteration on the cloud (drift-only kernels).
class MeasureFlow {
public:
  // closed-form bracket B(t,x) = b[t,x,mu_t]; the cloud is still evolved under
  // it so that measure integrals remain available.
  static MeasureFlow closed_form(std::function<double(double, double)> bracket,
                                 std::vector<double> cloud0, double T, double rk4_h = 1.0 / 256.0);

  // Picard iteration: sweep k solves x' = b[t,x,mu^{(k-1)}_t] for every cloud
  // sample by RK4 against the stored previous sweep. Throws
  // non_convergence_error when the sup-gap fails to contract.
  static MeasureFlow picard(const KernelSet& kernel, std::vector<double> cloud0, double T,
                            const PicardOptions& options = {});

  // bracket b[t, x, mu_t] (linear interpolation of the measure in time)
  double drift(double t, double x) const;

  // int_0^T E_{mu_s} |b[s, X, mu_s]|^2 ds by trapezoid over the flow grid
  double mean_square_drift() const;

  double horizon() const { return grid_.empty() ? 0.0 : grid_.back(); }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<std::vector<double>>& cloud() const { return cloud_; }

private:
  MeasureFlow() = default;
  void tabulate_ctx(const KernelSet& kernel);

  std::vector<double> grid_;
  std::vector<std::vector<double>> cloud_;  // cloud_[node][sample]
  std::function<double(double, double)> bracket_;          // closed form, if any
  std::function<double(double, double, const std::vector<double>&)> apply_;  // reduced
  std::vector<std::vector<double>> ctx_;  // ctx per node (reduced kernels)
  bool use_kernel_ = false;               // fallback: naive average over the cloud
  KernelSet kernel_storage_;
};

// Event-driven simulation of the N-particle system on [0,T]. The tick of
// particle i at time s applies sigma_N[s,x_i,mu,xi] + b_N[s,x_i,mu] with the
// empirical-measure bracket computed naively in O(N). stream_ids, when given,
// overrides the label index of each particle's clock/jump streams (used to
// exercise exchangeability; default is the particle index).
EnsembleTrajectory simulate_particles(const KernelSet& kernel, const std::vector<double>& init,
                                      double T, const JumpLaw& law, const RngStream& stream,
                                      const std::vector<std::size_t>* stream_ids = nullptr);

// Synchronous coupling: limit paths driven by the same clocks and jumps but
// with brackets evaluated against the limit flow.
struct CoupledResult {
  EnsembleTrajectory ensemble;
  // limit_states[k][i]: state of the i-th limit path just after the k-th event
  // of the merged log (only the ticking particle moves).
  std::vector<double> limit_final;
  std::vector<double> gap_sup;  // per particle: sup_t |X^i_t - Xbar^i_t|
};

CoupledResult simulate_coupled(const KernelSet& kernel, const std::vector<double>& init, double T,
                               const JumpLaw& law, const RngStream& stream,
                               const MeasureFlow& flow);

// max_i sup_t |X^i - Xbar^i|^2 for one replica.
double chaos_error(const CoupledResult& coupled);

// Y^N_T = sum_i [X^i_T - X^i_0 - int_0^T b[s, X^i_s, mu^N_s] ds] with the
// integral exact on the piecewise-constant trajectory. Drift-only kernels.
double fluctuation_stat(const EnsembleTrajectory& trajectory, const KernelSet& kernel);

}  // namespace cpflow

#endif
