#include "cpflow/nse2d.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "cpflow/errors.hpp"
#include "cpflow/pool.hpp"

namespace cpflow {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

using cvec = std::vector<std::complex<double>>;

// FFTW plans per grid size; all spectral work happens in the sequential parts
// of a solve, so the cache is not guarded.
struct Plans {
  fftw_complex* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

Plans& plans_for(int G) {
  static std::map<int, Plans> cache;
  auto it = cache.find(G);
  if (it != cache.end()) return it->second;
  Plans p;
  p.in = fftw_alloc_complex(std::size_t(G) * G);
  p.out = fftw_alloc_complex(std::size_t(G) * G);
  p.fwd = fftw_plan_dft_2d(G, G, p.in, p.out, FFTW_FORWARD, FFTW_ESTIMATE);
  p.bwd = fftw_plan_dft_2d(G, G, p.in, p.out, FFTW_BACKWARD, FFTW_ESTIMATE);
  return cache.emplace(G, p).first->second;
}

cvec fft2(const std::vector<double>& real, int G) {
  Plans& p = plans_for(G);
  const std::size_t n = std::size_t(G) * G;
  for (std::size_t i = 0; i < n; ++i) {
    p.in[i][0] = real[i];
    p.in[i][1] = 0.0;
  }
  fftw_execute(p.fwd);
  cvec spec(n);
  for (std::size_t i = 0; i < n; ++i) spec[i] = {p.out[i][0], p.out[i][1]};
  return spec;
}

std::vector<double> ifft2(const cvec& spec, int G) {
  Plans& p = plans_for(G);
  const std::size_t n = std::size_t(G) * G;
  for (std::size_t i = 0; i < n; ++i) {
    p.in[i][0] = spec[i].real();
    p.in[i][1] = spec[i].imag();
  }
  fftw_execute(p.bwd);
  std::vector<double> real(n);
  for (std::size_t i = 0; i < n; ++i) real[i] = p.out[i][0] / double(n);
  return real;
}

int wavenumber(int m, int G) { return m <= G / 2 ? m : m - G; }

void check_grid(int G) {
  if (G < 8 || (G & (G - 1)) != 0)
    throw std::invalid_argument("grid size must be a power of two >= 8");
}

// u_hat from w_hat; mean mode zeroed, Nyquist rows dropped (derivative op).
void biot_savart_spectral(const cvec& w_hat, int G, cvec& u1_hat, cvec& u2_hat) {
  u1_hat.assign(w_hat.size(), {0.0, 0.0});
  u2_hat.assign(w_hat.size(), {0.0, 0.0});
  for (int m1 = 0; m1 < G; ++m1) {
    const int k1 = wavenumber(m1, G);
    for (int m2 = 0; m2 < G; ++m2) {
      const int k2 = wavenumber(m2, G);
      if ((k1 == 0 && k2 == 0) || std::abs(k1) == G / 2 || std::abs(k2) == G / 2) continue;
      // curl u = w fixes the sign: u_hat = -i k_perp w_hat / |k|^2
      const double inv = 1.0 / double(k1 * k1 + k2 * k2);
      const std::complex<double> iw = std::complex<double>(0.0, -1.0) * w_hat[std::size_t(m1) * G + m2];
      u1_hat[std::size_t(m1) * G + m2] = iw * (-double(k2) * inv);
      u2_hat[std::size_t(m1) * G + m2] = iw * (double(k1) * inv);
    }
  }
}

double wrap_grid(double x, int G) {
  // position in grid units, wrapped to [0, G)
  double t = (x + kPi) / kTwoPi * double(G);
  t -= std::floor(t / double(G)) * double(G);
  if (t >= double(G)) t = 0.0;
  return t;
}

}  // namespace

double VorticityField::sup_norm() const {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double VorticityField::mean() const {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / double(v.size());
}

double VorticityField::interpolate(double x1, double x2) const {
  const double t1 = wrap_grid(x1, G), t2 = wrap_grid(x2, G);
  const int i0 = int(t1), j0 = int(t2);
  const int i1 = (i0 + 1) % G, j1 = (j0 + 1) % G;
  const double f1 = t1 - i0, f2 = t2 - j0;
  return (1 - f1) * ((1 - f2) * at(i0, j0) + f2 * at(i0, j1)) +
         f1 * ((1 - f2) * at(i1, j0) + f2 * at(i1, j1));
}

double VelocityField::sup_norm() const {
  double m = 0.0;
  for (double x : u1) m = std::max(m, std::abs(x));
  for (double x : u2) m = std::max(m, std::abs(x));
  return m;
}

std::array<double, 2> VelocityField::interpolate(double x1, double x2) const {
  const double t1 = wrap_grid(x1, G), t2 = wrap_grid(x2, G);
  const int i0 = int(t1), j0 = int(t2);
  const int i1 = (i0 + 1) % G, j1 = (j0 + 1) % G;
  const double f1 = t1 - i0, f2 = t2 - j0;
  const double w00 = (1 - f1) * (1 - f2), w01 = (1 - f1) * f2;
  const double w10 = f1 * (1 - f2), w11 = f1 * f2;
  const auto a = std::size_t(i0) * G + j0, b = std::size_t(i0) * G + j1;
  const auto c = std::size_t(i1) * G + j0, d = std::size_t(i1) * G + j1;
  return {w00 * u1[a] + w01 * u1[b] + w10 * u1[c] + w11 * u1[d],
          w00 * u2[a] + w01 * u2[b] + w10 * u2[c] + w11 * u2[d]};
}

VorticityField make_vorticity(int G, const std::function<double(double, double)>& f) {
  VorticityField w;
  w.G = G;
  w.v.resize(std::size_t(G) * G);
  for (int i = 0; i < G; ++i) {
    const double x1 = -kPi + kTwoPi * i / G;
    for (int j = 0; j < G; ++j) w.at(i, j) = f(x1, -kPi + kTwoPi * j / G);
  }
  return w;
}

VelocityField biot_savart(const VorticityField& w) {
  check_grid(w.G);
  const auto w_hat = fft2(w.v, w.G);
  cvec u1_hat, u2_hat;
  biot_savart_spectral(w_hat, w.G, u1_hat, u2_hat);
  VelocityField u;
  u.G = w.G;
  u.u1 = ifft2(u1_hat, w.G);
  u.u2 = ifft2(u2_hat, w.G);
  return u;
}

double divergence_residual(const VelocityField& u) {
  const int G = u.G;
  const auto u1_hat = fft2(u.u1, G);
  const auto u2_hat = fft2(u.u2, G);
  double div_max = 0.0, amp_max = 0.0;
  for (int m1 = 0; m1 < G; ++m1) {
    const int k1 = wavenumber(m1, G);
    for (int m2 = 0; m2 < G; ++m2) {
      const int k2 = wavenumber(m2, G);
      if (std::abs(k1) == G / 2 || std::abs(k2) == G / 2) continue;
      const std::size_t idx = std::size_t(m1) * G + m2;
      div_max = std::max(div_max, std::abs(double(k1) * u1_hat[idx] + double(k2) * u2_hat[idx]));
      amp_max = std::max(amp_max, std::max(std::abs(u1_hat[idx]), std::abs(u2_hat[idx])));
    }
  }
  return amp_max > 0.0 ? div_max / amp_max : 0.0;
}

bool sup_norm_bound_check(const VorticityField& w, double C) {
  const double wn = w.sup_norm();
  if (wn == 0.0) return true;
  return biot_savart(w).sup_norm() <= C * wn;
}

namespace {

std::vector<double> resample(const std::vector<double>& values, int G, int G_fine) {
  if (G_fine == G) return values;
  const auto spec = fft2(values, G);
  cvec fine(std::size_t(G_fine) * G_fine, {0.0, 0.0});
  const double scale = double(G_fine) * G_fine / (double(G) * G);
  const int K = std::min(G, G_fine) / 2 - 1;  // Nyquist dropped (band-limited fields)
  for (int k1 = -K; k1 <= K; ++k1) {
    const int m1 = (k1 + G) % G, n1 = (k1 + G_fine) % G_fine;
    for (int k2 = -K; k2 <= K; ++k2) {
      const int m2 = (k2 + G) % G, n2 = (k2 + G_fine) % G_fine;
      fine[std::size_t(n1) * G_fine + n2] = spec[std::size_t(m1) * G + m2] * scale;
    }
  }
  return ifft2(fine, G_fine);
}

}  // namespace

VorticityField refine_spectral(const VorticityField& w, int G_fine) {
  check_grid(w.G);
  check_grid(G_fine);
  VorticityField out;
  out.G = G_fine;
  out.v = resample(w.v, w.G, G_fine);
  return out;
}

VelocityField refine_spectral(const VelocityField& u, int G_fine) {
  check_grid(u.G);
  check_grid(G_fine);
  VelocityField out;
  out.G = G_fine;
  out.u1 = resample(u.u1, u.G, G_fine);
  out.u2 = resample(u.u2, u.G, G_fine);
  return out;
}

namespace {

// advection term of the remaining-time form d_tau v = nu Lap v + u.grad v,
// dealiased by the 2/3 rule; also reports max |u| for the CFL check
cvec advection_hat(const cvec& v_hat, int G, double* umax_out) {
  cvec u1_hat, u2_hat;
  biot_savart_spectral(v_hat, G, u1_hat, u2_hat);
  cvec d1_hat(v_hat.size()), d2_hat(v_hat.size());
  for (int m1 = 0; m1 < G; ++m1) {
    const int k1 = wavenumber(m1, G);
    for (int m2 = 0; m2 < G; ++m2) {
      const int k2 = wavenumber(m2, G);
      const std::size_t idx = std::size_t(m1) * G + m2;
      const bool nyq = std::abs(k1) == G / 2 || std::abs(k2) == G / 2;
      const std::complex<double> iv =
          nyq ? std::complex<double>(0.0, 0.0) : std::complex<double>(0.0, 1.0) * v_hat[idx];
      d1_hat[idx] = iv * double(k1);
      d2_hat[idx] = iv * double(k2);
    }
  }
  const auto u1 = ifft2(u1_hat, G), u2 = ifft2(u2_hat, G);
  const auto d1 = ifft2(d1_hat, G), d2 = ifft2(d2_hat, G);
  std::vector<double> prod(u1.size());
  double umax = 0.0;
  for (std::size_t i = 0; i < prod.size(); ++i) {
    prod[i] = u1[i] * d1[i] + u2[i] * d2[i];
    umax = std::max(umax, std::max(std::abs(u1[i]), std::abs(u2[i])));
  }
  if (umax_out) *umax_out = umax;
  auto out = fft2(prod, G);
  const int cut = G / 3;
  for (int m1 = 0; m1 < G; ++m1) {
    const int k1 = wavenumber(m1, G);
    for (int m2 = 0; m2 < G; ++m2) {
      const int k2 = wavenumber(m2, G);
      if (std::abs(k1) > cut || std::abs(k2) > cut) out[std::size_t(m1) * G + m2] = 0.0;
    }
  }
  return out;
}

}  // namespace

std::vector<VorticityField> spectral_reference(const VorticityField& w0, double nu, double T,
                                               const std::vector<double>& s_grid, int G,
                                               double dt) {
  check_grid(G);
  if (!(dt > 0.0) || !(T >= 0.0)) throw std::invalid_argument("spectral_reference: dt > 0, T >= 0");
  for (double s : s_grid)
    if (s < 0.0 || s > T) throw std::invalid_argument("spectral_reference: s outside [0, T]");

  VorticityField w0g = w0.G == G ? w0 : refine_spectral(w0, G);
  cvec v_hat = fft2(w0g.v, G);

  // remaining-time targets tau = T - s, walked in increasing order
  std::vector<std::size_t> order(s_grid.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return s_grid[a] > s_grid[b]; });
  std::vector<VorticityField> result(s_grid.size());

  // exact viscous factor over half a step, per mode
  std::vector<double> half_decay(v_hat.size());
  auto fill_decay = [&](double step) {
    for (int m1 = 0; m1 < G; ++m1) {
      const int k1 = wavenumber(m1, G);
      for (int m2 = 0; m2 < G; ++m2) {
        const int k2 = wavenumber(m2, G);
        half_decay[std::size_t(m1) * G + m2] = std::exp(-nu * double(k1 * k1 + k2 * k2) * step / 2.0);
      }
    }
  };

  const double dx = kTwoPi / G;
  double tau = 0.0;
  std::size_t next = 0;
  while (next < order.size()) {
    const double target = T - s_grid[order[next]];
    if (target <= tau + 1e-13) {
      result[order[next]].G = G;
      result[order[next]].v = ifft2(v_hat, G);
      ++next;
      continue;
    }
    const double step = std::min(dt, target - tau);
    fill_decay(step);
    double umax = 0.0;
    const cvec a = advection_hat(v_hat, G, &umax);
    if (dt * umax > dx)
      throw std::invalid_argument("spectral_reference: advective CFL violated, reduce dt");
    const std::size_t n = v_hat.size();
    cvec ev(n), stage(n), b, c, d;
    for (std::size_t i = 0; i < n; ++i) ev[i] = half_decay[i] * v_hat[i];
    for (std::size_t i = 0; i < n; ++i) stage[i] = half_decay[i] * (v_hat[i] + 0.5 * step * a[i]);
    b = advection_hat(stage, G, nullptr);
    for (std::size_t i = 0; i < n; ++i) stage[i] = ev[i] + 0.5 * step * b[i];
    c = advection_hat(stage, G, nullptr);
    for (std::size_t i = 0; i < n; ++i) stage[i] = half_decay[i] * (ev[i] + step * c[i]);
    d = advection_hat(stage, G, nullptr);
    for (std::size_t i = 0; i < n; ++i) {
      const auto e = half_decay[i];
      v_hat[i] = e * e * v_hat[i] +
                 step / 6.0 * (e * e * a[i] + 2.0 * e * (b[i] + c[i]) + d[i]);
    }
    tau += step;
  }
  return result;
}

namespace {

void validate_transport(double nu, double eps, double T, const std::vector<double>& s_grid,
                        std::size_t M, const NseOptions& options) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must be in (0,1)");
  if (nu < 0.0) throw std::invalid_argument("nu must be >= 0");
  if (M == 0) throw std::invalid_argument("M must be positive");
  if (options.antithetic && M % 2 != 0)
    throw std::invalid_argument("M must be even with antithetic pairs");
  if (s_grid.empty() || !std::is_sorted(s_grid.begin(), s_grid.end()))
    throw std::invalid_argument("s_grid must be nonempty ascending");
  if (s_grid.front() < 0.0 || s_grid.back() > T)
    throw std::invalid_argument("s_grid must lie in [0, T]");
}

}  // namespace

std::vector<VorticityField> mc_transport(const VorticityField& w0,
                                         const std::vector<VelocityField>& u_slices, double nu,
                                         double eps, double T, const std::vector<double>& s_grid,
                                         std::size_t M, const RngStream& stream,
                                         const NseOptions& options) {
  validate_transport(nu, eps, T, s_grid, M, options);
  const int G = w0.G;
  const bool have_u = !u_slices.empty();
  if (have_u && u_slices.size() != s_grid.size())
    throw std::invalid_argument("u_slices must match s_grid");

  const int Gf = options.refine > 1 ? G * options.refine : G;
  const VorticityField w0f = Gf == G ? w0 : refine_spectral(w0, Gf);
  std::vector<VelocityField> uf;
  if (have_u) {
    uf.reserve(u_slices.size());
    for (const auto& u : u_slices) uf.push_back(Gf == G ? u : refine_spectral(u, Gf));
  }

  const std::size_t n_slices = s_grid.size();
  std::vector<VorticityField> out(n_slices);
  for (auto& w : out) {
    w.G = G;
    w.v.assign(std::size_t(G) * G, 0.0);
  }

  const double h = 2.0 * std::sqrt(eps * nu);
  const std::size_t n_pairs = options.antithetic ? M / 2 : M;

  // exact mean of the zero-drift transport per slice (control variate shift)
  const bool cv = options.control_variate && h > 0.0;
  std::vector<std::vector<double>> ez;
  if (cv) {
    const cvec w0_hat = fft2(w0.v, G);
    ez.resize(n_slices);
    for (std::size_t j = 0; j < n_slices; ++j) {
      cvec spec(w0_hat.size());
      for (int a = 0; a < G; ++a) {
        const double c1 = std::cos(h * wavenumber(a, G));
        for (int b = 0; b < G; ++b) {
          const double phi = 0.5 * (c1 + std::cos(h * wavenumber(b, G)));
          spec[std::size_t(a) * G + b] =
              w0_hat[std::size_t(a) * G + b] * std::exp((T - s_grid[j]) * (phi - 1.0) / eps);
        }
      }
      ez[j] = ifft2(spec, G);
    }
  }

  parallel_for_indexed(std::size_t(G) * G, options.workers, [&](std::size_t idx) {
    const double x1 = -kPi + kTwoPi * double(idx / std::size_t(G)) / G;
    const double x2 = -kPi + kTwoPi * double(idx % std::size_t(G)) / G;
    for (std::size_t j = 0; j < n_slices; ++j) {
      const RngStream base = stream.derive({StreamLabel::kPoint, idx}).derive({StreamLabel::kSlice, j});
      double acc = 0.0;
      for (std::size_t q = 0; q < n_pairs; ++q) {
        const RngStream pr = base.derive({StreamLabel::kPath, q + options.path_offset});
        RngStream clock = pr.derive({StreamLabel::kClock, 0});
        RngStream jump = pr.derive({StreamLabel::kJump, 0});
        double t = s_grid[j];
        double p1 = x1, p2 = x2, m1 = x1, m2 = x2;
        double d1 = 0.0, d2 = 0.0;  // noise-only displacement of the plus path
        std::size_t cursor = j;
        while (true) {
          t += eps * clock.next_exponential();
          if (t > T) break;
          if (have_u) {
            while (cursor + 1 < n_slices && s_grid[cursor + 1] <= t) ++cursor;
            const auto ap = uf[cursor].interpolate(p1, p2);
            p1 += eps * ap[0];
            p2 += eps * ap[1];
            if (options.antithetic) {
              const auto am = uf[cursor].interpolate(m1, m2);
              m1 += eps * am[0];
              m2 += eps * am[1];
            }
          }
          if (h > 0.0) {
            const std::uint64_t r = jump.next_u64();
            const double sgn = (r & 2) ? -1.0 : 1.0;
            if (r & 1) {
              p1 += h * sgn;
              m1 -= h * sgn;
              d1 += h * sgn;
            } else {
              p2 += h * sgn;
              m2 -= h * sgn;
              d2 += h * sgn;
            }
          }
        }
        acc += w0f.interpolate(p1, p2);
        if (options.antithetic) acc += w0f.interpolate(m1, m2);
        if (cv) {
          acc -= w0f.interpolate(x1 + d1, x2 + d2);
          if (options.antithetic) acc -= w0f.interpolate(x1 - d1, x2 - d2);
        }
      }
      out[j].v[idx] = acc / double(M) + (cv ? ez[j][idx] : 0.0);
    }
  });
  return out;
}

double scheme_generator(const std::function<double(double, double)>& f, double nu, double eps,
                        const std::array<double, 2>& u, double x1, double x2) {
  const double h = 2.0 * std::sqrt(eps * nu);
  const double y1 = x1 + eps * u[0], y2 = x2 + eps * u[1];
  const double sum = f(y1 + h, y2) + f(y1 - h, y2) + f(y1, y2 + h) + f(y1, y2 - h);
  return (0.25 * sum - f(x1, x2)) / eps;
}

NseSolution solve_nse_poisson(const VorticityField& w0, double nu, double eps, double T,
                              const std::vector<double>& s_grid, std::size_t M, double picard_tol,
                              const RngStream& stream, const NseOptions& options) {
  check_grid(w0.G);
  validate_transport(nu, eps, T, s_grid, M, options);
  if (!(picard_tol > 0.0)) throw std::invalid_argument("picard_tol must be positive");

  NseSolution sol;
  sol.s_grid = s_grid;
  std::vector<VelocityField> u_prev;  // empty = zero velocity
  int worse_streak = 0;
  for (int iter = 0; iter < options.max_iter; ++iter) {
    auto w = mc_transport(w0, u_prev, nu, eps, T, s_grid, M, stream, options);
    std::vector<VelocityField> u;
    u.reserve(w.size());
    for (const auto& field : w) u.push_back(biot_savart(field));
    double gap = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j)
      for (std::size_t i = 0; i < u[j].u1.size(); ++i) {
        const double p1 = u_prev.empty() ? 0.0 : u_prev[j].u1[i];
        const double p2 = u_prev.empty() ? 0.0 : u_prev[j].u2[i];
        gap = std::max(gap, std::max(std::abs(u[j].u1[i] - p1), std::abs(u[j].u2[i] - p2)));
      }
    if (!sol.gap_history.empty() && gap >= sol.gap_history.back()) {
      if (++worse_streak >= 3) {
        std::ostringstream msg;
        msg << "picard iteration not contracting; gaps:";
        for (double g : sol.gap_history) msg << " " << g;
        msg << " " << gap;
        throw non_convergence_error(msg.str());
      }
    } else {
      worse_streak = 0;
    }
    sol.gap_history.push_back(gap);
    sol.w = std::move(w);
    sol.u = std::move(u);
    u_prev = sol.u;
    sol.sweeps = iter + 1;
    if (gap < picard_tol) break;
  }
  return sol;
}

namespace {

void write_matrix(std::ofstream& out, const std::vector<double>& v, int G) {
  char buf[32];
  for (int i = 0; i < G; ++i) {
    for (int j = 0; j < G; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", v[std::size_t(i) * G + j]);
      out << buf << (j + 1 < G ? "," : "\n");
    }
  }
}

}  // namespace

void write_field_csv(const std::string& path, const VorticityField& w, double s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,w\n", w.G, s);
  out << "G,s,component\n" << buf;
  write_matrix(out, w.v, w.G);
}

void write_field_csv(const std::string& path, const VelocityField& u, double s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  char buf[64];
  out << "G,s,component\n";
  std::snprintf(buf, sizeof(buf), "%d,%.17g,u1\n", u.G, s);
  out << buf;
  write_matrix(out, u.u1, u.G);
  std::snprintf(buf, sizeof(buf), "%d,%.17g,u2\n", u.G, s);
  out << buf;
  write_matrix(out, u.u2, u.G);
}

std::pair<VorticityField, double> read_vorticity_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "G,s,component") throw std::runtime_error("bad field header in " + path);
  std::getline(in, line);
  VorticityField w;
  double s = 0.0;
  {
    std::istringstream meta(line);
    char comma;
    std::string comp;
    meta >> w.G >> comma >> s;
    if (!meta) throw std::runtime_error("bad field metadata in " + path);
  }
  w.v.reserve(std::size_t(w.G) * w.G);
  for (int i = 0; i < w.G; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("truncated field in " + path);
    std::istringstream row(line);
    std::string cell;
    for (int j = 0; j < w.G; ++j) {
      if (!std::getline(row, cell, ',')) throw std::runtime_error("short row in " + path);
      w.v.push_back(std::stod(cell));
    }
  }
  return {w, s};
}

}  // namespace cpflow
