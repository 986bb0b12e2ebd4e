#include "cpflow/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cpflow/errors.hpp"

namespace cpflow {

namespace {

constexpr double kDivergenceBound = 1e12;

bool finite_in_range(const Vec& x) {
  for (int i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || std::abs(x[i]) > kDivergenceBound) return false;
  return true;
}

Vec atom_to_vec(const std::array<int, 3>& z, int dim) {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = z[i];
  return v;
}

}  // namespace

Vec SchemePath::evaluate(double t) const {
  if (t < 0.0 || t > horizon) throw std::out_of_range("SchemePath::evaluate: t outside [0, horizon]");
  auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto n = static_cast<std::size_t>(it - times.begin());
  return n == 0 ? x0 : states[n - 1];
}

Vec SchemePath::left_limit(std::size_t n) const {
  if (n == 0 || n > states.size()) throw std::out_of_range("SchemePath::left_limit: bad event index");
  return n == 1 ? x0 : states[n - 2];
}

Vec tame_drift(const Vec& b_val, double m, double eps) {
  if (m < 1.0) throw std::invalid_argument("tame_drift: m >= 1 required");
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("tame_drift: eps in (0,1] required");
  const double nb = b_val.norm();
  if (nb == 0.0) return b_val;
  return (eps / (1.0 + std::sqrt(eps) * std::pow(nb, 1.0 - 1.0 / m))) * b_val;
}

Vec drift_increment(const CoefficientSet& coeffs, double eps, double t, const Vec& x) {
  if (!coeffs.drift) return Vec::Zero(x.size());
  const Vec b = coeffs.drift(t, x);
  return coeffs.taming_enabled ? tame_drift(b, coeffs.m, eps) : Vec(eps * b);
}

Vec scale_diffusion(const CoefficientSet& coeffs, double eps, double t, const Vec& x,
                    const Vec& z) {
  if (!coeffs.diffusion) return Vec::Zero(x.size());
  if (coeffs.alpha >= 2.0) return std::sqrt(eps) * coeffs.diffusion(t, x, z);
  return coeffs.diffusion(t, x, std::pow(eps, 1.0 / coeffs.alpha) * z);
}

Vec step(double t_prev, const Vec& state, double s_next, const Vec& xi,
         const CoefficientSet& coeffs, double eps, std::size_t event_index) {
  if (!(s_next > t_prev)) throw std::invalid_argument("step: S_next > t_prev required");
  Vec next = state;
  next += scale_diffusion(coeffs, eps, s_next, state, xi);
  next += drift_increment(coeffs, eps, s_next, state);
  if (!finite_in_range(next))
    throw divergence_error(event_index, "step: state left the finite range");
  return next;
}

SchemePath simulate_path(const CoefficientSet& coeffs, const Vec& x0, double eps, double T,
                         const JumpLaw& law, const RngStream& stream) {
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("simulate_path: eps in (0,1]");
  if (!(T > 0.0)) throw std::invalid_argument("simulate_path: T > 0 required");
  auto clock_stream = stream.derive({StreamLabel::kClock, 0});
  auto jump_stream = stream.derive({StreamLabel::kJump, 0});
  const Clock clock = build_clock(eps, T, clock_stream);

  SchemePath path;
  path.x0 = x0;
  path.eps = eps;
  path.horizon = T;
  Vec state = x0;
  double t_prev = 0.0;
  const bool need_jumps = static_cast<bool>(coeffs.diffusion);
  std::size_t n = 0;
  for (double s : clock.jump_times) {
    if (s > T) break;
    ++n;
    Vec xi = need_jumps ? atom_to_vec(law.sample(jump_stream), coeffs.dim)
                        : Vec::Zero(coeffs.dim);
    state = step(t_prev, state, s, xi, coeffs, eps, n);
    path.times.push_back(s);
    path.states.push_back(state);
    t_prev = s;
  }
  return path;
}

double generator_apply(const std::function<double(const Vec&)>& f, double t, const Vec& x,
                       const CoefficientSet& coeffs, const JumpLaw& law, double eps) {
  const Vec b_eps = drift_increment(coeffs, eps, t, x);
  const double fx = f(x);
  double acc = 0.0;
  for (const auto& atom : law.atoms()) {
    const Vec z = atom_to_vec(atom.z, coeffs.dim);
    const Vec y = x + scale_diffusion(coeffs, eps, t, x, z) + b_eps;
    acc += (f(y) - fx) * atom.prob;
  }
  return acc / eps;
}

JacobianReport path_jacobian(const SchemePath& path, const CoefficientSet& coeffs) {
  if (!coeffs.drift_grad) throw std::logic_error("path_jacobian: drift gradient not supplied");
  if (coeffs.taming_enabled)
    throw std::logic_error("path_jacobian: analytic gradient only available untamed");
  const auto d = static_cast<Eigen::Index>(path.x0.size());
  Mat J = Mat::Identity(d, d);
  JacobianReport report;
  report.determinants.reserve(path.times.size());
  for (std::size_t n = 0; n < path.times.size(); ++n) {
    const Vec& left = n == 0 ? path.x0 : path.states[n - 1];
    J = (Mat::Identity(d, d) + path.eps * coeffs.drift_grad(path.times[n], left)) * J;
    const double det = J.determinant();
    report.determinants.push_back(det);
    if (std::abs(det) < 1e-12) report.singular = true;
  }
  return report;
}

}  // namespace cpflow
