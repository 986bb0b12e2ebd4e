#include "cpflow/mckean.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

#include "cpflow/clock.hpp"
#include "cpflow/errors.hpp"

namespace cpflow {

namespace {

constexpr double kDivergenceBound = 1e12;

// per-event drift increment from a bracket value B = b[t,x,mu], eps = 1/N
double scale_drift(double B, double eps, double m, bool tamed) {
  if (!tamed) return eps * B;
  const double nb = std::abs(B);
  if (nb == 0.0) return 0.0;
  return eps * B / (1.0 + std::sqrt(eps) * std::pow(nb, 1.0 - 1.0 / m));
}

double scale_sigma(const KernelSet& kernel, double eps, double t, double x, double z) {
  if (!kernel.sigma || z == 0.0) return 0.0;
  if (kernel.alpha >= 2.0) return std::sqrt(eps) * kernel.sigma(t, x, z);
  return kernel.sigma(t, x, std::pow(eps, 1.0 / kernel.alpha) * z);
}

double naive_bracket(const KernelSet& kernel, double t, double x,
                     const std::vector<double>& support) {
  // summed in value order so the result depends only on the multiset of
  // contributions (exact exchangeability under particle permutations)
  std::vector<double> terms;
  terms.reserve(support.size());
  for (double y : support) terms.push_back(kernel.b(t, x, y));
  std::sort(terms.begin(), terms.end());
  double acc = 0.0;
  for (double v : terms) acc += v;
  return acc / double(support.size());
}

struct MergedEvent {
  double time;
  std::uint32_t particle;
};

std::vector<MergedEvent> merged_schedule(std::size_t N, double T, const RngStream& stream,
                                         const std::vector<std::size_t>* stream_ids) {
  std::vector<MergedEvent> schedule;
  const double eps = 1.0 / double(N);
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t id = stream_ids ? (*stream_ids)[i] : i;
    auto cs = stream.derive({StreamLabel::kParticle, id}).derive({StreamLabel::kClock, 0});
    for (double s : build_clock(eps, T, cs).jump_times)
      if (s <= T) schedule.push_back({s, static_cast<std::uint32_t>(i)});
  }
  std::sort(schedule.begin(), schedule.end(),
            [](const MergedEvent& a, const MergedEvent& b) {
              return a.time < b.time || (a.time == b.time && a.particle < b.particle);
            });
  return schedule;
}

}  // namespace

std::vector<double> EnsembleTrajectory::states_at(double t) const {
  if (t < 0.0 || t > horizon + 1e-12)
    throw std::out_of_range("EnsembleTrajectory::states_at: t outside [0, horizon]");
  std::vector<double> states = init;
  for (const auto& e : events) {
    if (e.time > t) break;
    states[e.particle] = e.state;
  }
  return states;
}

std::vector<std::size_t> EnsembleTrajectory::per_particle_counts() const {
  std::vector<std::size_t> counts(N, 0);
  for (const auto& e : events) ++counts[e.particle];
  return counts;
}

EnsembleTrajectory simulate_particles(const KernelSet& kernel, const std::vector<double>& init,
                                      double T, const JumpLaw& law, const RngStream& stream,
                                      const std::vector<std::size_t>* stream_ids) {
  if (init.empty()) throw std::invalid_argument("simulate_particles: N >= 1 required");
  if (!(T > 0.0)) throw std::invalid_argument("simulate_particles: T > 0 required");
  const std::size_t N = init.size();
  const double eps = 1.0 / double(N);

  EnsembleTrajectory traj;
  traj.N = N;
  traj.horizon = T;
  traj.init = init;

  auto schedule = merged_schedule(N, T, stream, stream_ids);
  std::vector<RngStream> jump_streams;
  jump_streams.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t id = stream_ids ? (*stream_ids)[i] : i;
    jump_streams.push_back(stream.derive({StreamLabel::kParticle, id}).derive({StreamLabel::kJump, 0}));
  }

  std::vector<double> states = init;
  traj.events.reserve(schedule.size());
  std::size_t n = 0;
  for (const auto& ev : schedule) {
    ++n;
    const std::uint32_t i = ev.particle;
    double xi = 0.0;
    if (kernel.sigma) xi = double(law.sample(jump_streams[i])[0]);
    const double B = naive_bracket(kernel, ev.time, states[i], states);
    const double next = states[i] + scale_sigma(kernel, eps, ev.time, states[i], xi) +
                        scale_drift(B, eps, kernel.m, kernel.taming_enabled);
    if (!std::isfinite(next) || std::abs(next) > kDivergenceBound)
      throw divergence_error(n, "simulate_particles: state left the finite range");
    states[i] = next;
    traj.events.push_back({ev.time, i, next, xi});
  }
  return traj;
}

void MeasureFlow::tabulate_ctx(const KernelSet& kernel) {
  if (!kernel.reduce || !kernel.apply) return;
  apply_ = kernel.apply;
  ctx_.clear();
  ctx_.reserve(grid_.size());
  for (std::size_t k = 0; k < grid_.size(); ++k) ctx_.push_back(kernel.reduce(grid_[k], cloud_[k]));
}

MeasureFlow MeasureFlow::closed_form(std::function<double(double, double)> bracket,
                                     std::vector<double> cloud0, double T, double rk4_h) {
  if (!bracket) throw std::invalid_argument("MeasureFlow::closed_form: null bracket");
  MeasureFlow flow;
  flow.bracket_ = std::move(bracket);
  const auto n_steps = static_cast<std::size_t>(std::ceil(T / rk4_h - 1e-9));
  flow.grid_.push_back(0.0);
  flow.cloud_.push_back(cloud0);
  std::vector<double> y = std::move(cloud0);
  double t = 0.0;
  for (std::size_t n = 1; n <= n_steps; ++n) {
    const double t_next = n == n_steps ? T : double(n) * rk4_h;
    const double dt = t_next - t;
    for (double& x : y) {
      const double k1 = flow.bracket_(t, x);
      const double k2 = flow.bracket_(t + dt / 2, x + dt / 2 * k1);
      const double k3 = flow.bracket_(t + dt / 2, x + dt / 2 * k2);
      const double k4 = flow.bracket_(t + dt, x + dt * k3);
      x += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    t = t_next;
    flow.grid_.push_back(t);
    flow.cloud_.push_back(y);
  }
  return flow;
}

MeasureFlow MeasureFlow::picard(const KernelSet& kernel, std::vector<double> cloud0, double T,
                                const PicardOptions& options) {
  if (!kernel.b) throw std::invalid_argument("MeasureFlow::picard: kernel has no drift");
  if (kernel.sigma)
    throw std::invalid_argument("MeasureFlow::picard: drift-only kernels only");
  MeasureFlow flow;
  flow.kernel_storage_ = kernel;
  const auto n_steps = static_cast<std::size_t>(std::ceil(T / options.rk4_h - 1e-9));
  flow.grid_.resize(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k)
    flow.grid_[k] = k == n_steps ? T : double(k) * options.rk4_h;

  const std::size_t K = cloud0.size();
  // sweep 0: flow frozen at the initial measure
  std::vector<std::vector<double>> prev(n_steps + 1, cloud0);
  const bool reduced = kernel.reduce && kernel.apply;

  // bracket against the previous sweep, measure linearly interpolated in time
  std::vector<std::vector<double>> prev_ctx;
  auto rebuild_ctx = [&] {
    if (!reduced) return;
    prev_ctx.clear();
    prev_ctx.reserve(prev.size());
    for (std::size_t k = 0; k < prev.size(); ++k) prev_ctx.push_back(kernel.reduce(flow.grid_[k], prev[k]));
  };
  rebuild_ctx();

  auto locate = [&](double t) {
    auto it = std::upper_bound(flow.grid_.begin(), flow.grid_.end(), t);
    std::size_t hi = std::min<std::size_t>(it - flow.grid_.begin(), n_steps);
    std::size_t lo = hi == 0 ? 0 : hi - 1;
    const double dt = flow.grid_[hi] - flow.grid_[lo];
    const double w = dt > 0 ? (t - flow.grid_[lo]) / dt : 0.0;
    return std::tuple<std::size_t, std::size_t, double>{lo, hi, std::clamp(w, 0.0, 1.0)};
  };
  std::vector<double> interp_buffer(reduced ? 0 : K);
  auto bracket_prev = [&](double t, double x) {
    auto [lo, hi, w] = locate(t);
    if (reduced) {
      std::vector<double> ctx(prev_ctx[lo].size());
      for (std::size_t c = 0; c < ctx.size(); ++c)
        ctx[c] = (1.0 - w) * prev_ctx[lo][c] + w * prev_ctx[hi][c];
      return kernel.apply(t, x, ctx);
    }
    for (std::size_t l = 0; l < K; ++l)
      interp_buffer[l] = (1.0 - w) * prev[lo][l] + w * prev[hi][l];
    return naive_bracket(kernel, t, x, interp_buffer);
  };

  double best_gap = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    std::vector<std::vector<double>> next(n_steps + 1);
    next[0] = cloud0;
    std::vector<double> y = cloud0;
    for (std::size_t k = 1; k <= n_steps; ++k) {
      const double t0 = flow.grid_[k - 1], dt = flow.grid_[k] - flow.grid_[k - 1];
      for (double& x : y) {
        const double k1 = bracket_prev(t0, x);
        const double k2 = bracket_prev(t0 + dt / 2, x + dt / 2 * k1);
        const double k3 = bracket_prev(t0 + dt / 2, x + dt / 2 * k2);
        const double k4 = bracket_prev(t0 + dt, x + dt * k3);
        x += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      }
      next[k] = y;
    }
    double gap = 0.0;
    for (std::size_t k = 0; k <= n_steps; ++k)
      for (std::size_t l = 0; l < K; ++l) gap = std::max(gap, std::abs(next[k][l] - prev[k][l]));
    prev = std::move(next);
    rebuild_ctx();
    if (gap < options.picard_tol) {
      flow.cloud_ = std::move(prev);
      flow.use_kernel_ = true;
      flow.tabulate_ctx(flow.kernel_storage_);
      return flow;
    }
    if (gap >= best_gap) {
      if (++stale >= 10)
        throw non_convergence_error("MeasureFlow::picard: sup-gap not decreasing over 10 sweeps");
    } else {
      best_gap = gap;
      stale = 0;
    }
  }
  throw non_convergence_error("MeasureFlow::picard: no contraction within max_sweeps");
}

double MeasureFlow::drift(double t, double x) const {
  if (bracket_) return bracket_(t, x);
  auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  std::size_t hi = std::min<std::size_t>(it - grid_.begin(), grid_.size() - 1);
  std::size_t lo = hi == 0 ? 0 : hi - 1;
  const double dt = grid_[hi] - grid_[lo];
  const double w = dt > 0 ? std::clamp((t - grid_[lo]) / dt, 0.0, 1.0) : 0.0;
  if (apply_) {
    std::vector<double> ctx(ctx_[lo].size());
    for (std::size_t c = 0; c < ctx.size(); ++c)
      ctx[c] = (1.0 - w) * ctx_[lo][c] + w * ctx_[hi][c];
    return apply_(t, x, ctx);
  }
  if (!use_kernel_) throw std::logic_error("MeasureFlow::drift: no evaluator available");
  std::vector<double> support(cloud_[lo].size());
  for (std::size_t l = 0; l < support.size(); ++l)
    support[l] = (1.0 - w) * cloud_[lo][l] + w * cloud_[hi][l];
  return naive_bracket(kernel_storage_, t, x, support);
}

double MeasureFlow::mean_square_drift() const {
  if (grid_.size() < 2 || cloud_.empty())
    throw std::logic_error("MeasureFlow::mean_square_drift: no cloud available");
  auto node_value = [&](std::size_t k) {
    double acc = 0.0;
    for (double y : cloud_[k]) {
      const double B = drift(grid_[k], y);
      acc += B * B;
    }
    return acc / double(cloud_[k].size());
  };
  double integral = 0.0;
  double f_prev = node_value(0);
  for (std::size_t k = 1; k < grid_.size(); ++k) {
    const double f = node_value(k);
    integral += 0.5 * (f_prev + f) * (grid_[k] - grid_[k - 1]);
    f_prev = f;
  }
  return integral;
}

CoupledResult simulate_coupled(const KernelSet& kernel, const std::vector<double>& init, double T,
                               const JumpLaw& law, const RngStream& stream,
                               const MeasureFlow& flow) {
  if (init.empty()) throw std::invalid_argument("simulate_coupled: N >= 1 required");
  if (flow.horizon() + 1e-12 < T && !flow.grid().empty() && flow.horizon() > 0.0)
    throw std::invalid_argument("simulate_coupled: flow horizon shorter than T");
  const std::size_t N = init.size();
  const double eps = 1.0 / double(N);

  CoupledResult out;
  out.ensemble.N = N;
  out.ensemble.horizon = T;
  out.ensemble.init = init;
  out.gap_sup.assign(N, 0.0);

  auto schedule = merged_schedule(N, T, stream, nullptr);
  std::vector<RngStream> jump_streams;
  jump_streams.reserve(N);
  for (std::size_t i = 0; i < N; ++i)
    jump_streams.push_back(stream.derive({StreamLabel::kParticle, i}).derive({StreamLabel::kJump, 0}));

  std::vector<double> states = init, limit = init;
  out.ensemble.events.reserve(schedule.size());
  std::size_t n = 0;
  for (const auto& ev : schedule) {
    ++n;
    const std::uint32_t i = ev.particle;
    double xi = 0.0;
    if (kernel.sigma) xi = double(law.sample(jump_streams[i])[0]);

    const double B_emp = naive_bracket(kernel, ev.time, states[i], states);
    const double next = states[i] + scale_sigma(kernel, eps, ev.time, states[i], xi) +
                        scale_drift(B_emp, eps, kernel.m, kernel.taming_enabled);
    const double B_lim = flow.drift(ev.time, limit[i]);
    const double next_lim = limit[i] + scale_sigma(kernel, eps, ev.time, limit[i], xi) +
                            scale_drift(B_lim, eps, kernel.m, kernel.taming_enabled);
    if (!std::isfinite(next) || !std::isfinite(next_lim) ||
        std::abs(next) > kDivergenceBound || std::abs(next_lim) > kDivergenceBound)
      throw divergence_error(n, "simulate_coupled: state left the finite range");
    states[i] = next;
    limit[i] = next_lim;
    out.ensemble.events.push_back({ev.time, i, next, xi});
    out.gap_sup[i] = std::max(out.gap_sup[i], std::abs(next - next_lim));
  }
  out.limit_final = std::move(limit);
  return out;
}

double chaos_error(const CoupledResult& coupled) {
  double worst = 0.0;
  for (double g : coupled.gap_sup) worst = std::max(worst, g);
  return worst * worst;
}

double fluctuation_stat(const EnsembleTrajectory& trajectory, const KernelSet& kernel) {
  if (kernel.sigma) throw std::invalid_argument("fluctuation_stat: drift-only kernels only");
  if (!kernel.time_independent)
    throw std::invalid_argument("fluctuation_stat: exact integral needs a time-independent kernel");
  const std::size_t N = trajectory.N;
  std::vector<double> states = trajectory.init;
  const bool reduced = kernel.reduce && kernel.apply;

  // F[j] = b[x_j, mu^N] maintained incrementally; S = sum_j F[j]
  std::vector<double> F(reduced ? 0 : N, 0.0);
  double S = 0.0;
  auto recompute_S = [&] {
    if (reduced) {
      const auto ctx = kernel.reduce(0.0, states);
      S = 0.0;
      for (double x : states) S += kernel.apply(0.0, x, ctx);
    } else {
      S = 0.0;
      for (std::size_t j = 0; j < N; ++j) S += F[j];
    }
  };
  if (!reduced) {
    for (std::size_t j = 0; j < N; ++j) F[j] = naive_bracket(kernel, 0.0, states[j], states);
  }
  recompute_S();

  double integral = 0.0;
  double t_prev = 0.0;
  for (const auto& ev : trajectory.events) {
    integral += S * (ev.time - t_prev);
    t_prev = ev.time;
    const std::uint32_t i = ev.particle;
    const double old_x = states[i];
    states[i] = ev.state;
    if (!reduced) {
      for (std::size_t j = 0; j < N; ++j)
        if (j != i) F[j] += (kernel.b(0.0, states[j], states[i]) - kernel.b(0.0, states[j], old_x)) / double(N);
      F[i] = naive_bracket(kernel, 0.0, states[i], states);
    }
    recompute_S();
  }
  integral += S * (trajectory.horizon - t_prev);

  double Y = 0.0;
  for (std::size_t i = 0; i < N; ++i) Y += states[i] - trajectory.init[i];
  return Y - integral;
}

}  // namespace cpflow
