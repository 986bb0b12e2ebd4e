#include "cpflow/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cpflow/errors.hpp"

namespace cpflow {

namespace {

bool all_finite(const Vec& x) {
  return x.allFinite();
}

// Gauss-Hermite rule for weight e^{-t^2} via the Golub-Welsch eigenproblem.
struct HermiteRule {
  std::vector<double> nodes, weights;
};

HermiteRule gauss_hermite(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) J(i, i - 1) = J(i - 1, i) = std::sqrt(i / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  HermiteRule rule;
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  for (int i = 0; i < n; ++i) {
    rule.nodes.push_back(es.eigenvalues()[i]);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights.push_back(v0 * v0 * sqrt_pi);
  }
  return rule;
}

}  // namespace

Vec ReferencePath::evaluate(double t) const {
  if (grid.empty()) throw std::out_of_range("ReferencePath::evaluate: empty path");
  if (t < grid.front() || t > grid.back())
    throw std::out_of_range("ReferencePath::evaluate: t outside the grid");
  auto it = std::upper_bound(grid.begin(), grid.end(), t);
  if (it == grid.end()) return states.back();
  auto i = static_cast<std::size_t>(it - grid.begin());
  if (i == 0) return states.front();
  --i;
  const double t0 = grid[i], t1 = grid[i + 1], dt = t1 - t0;
  const double s = (t - t0) / dt;
  if (derivs.size() == states.size()) {
    // cubic Hermite basis
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    return h00 * states[i] + h10 * dt * derivs[i] + h01 * states[i + 1] +
           h11 * dt * derivs[i + 1];
  }
  return (1 - s) * states[i] + s * states[i + 1];
}

ReferencePath rk4_solve(const DriftFn& b, const Vec& x0, double T, double h) {
  if (!(h > 0.0) || !(T > 0.0)) throw std::invalid_argument("rk4_solve: h, T > 0 required");
  ReferencePath path;
  path.method = ReferencePath::Method::kRk4;
  Vec x = x0;
  double t = 0.0;
  path.grid.push_back(0.0);
  path.states.push_back(x);
  path.derivs.push_back(b(0.0, x));
  const auto n_steps = static_cast<std::size_t>(std::ceil(T / h - 1e-9));
  for (std::size_t n = 1; n <= n_steps; ++n) {
    const double t_next = n == n_steps ? T : n * h;
    const double dt = t_next - t;
    const Vec k1 = b(t, x);
    const Vec k2 = b(t + dt / 2, x + (dt / 2) * k1);
    const Vec k3 = b(t + dt / 2, x + (dt / 2) * k2);
    const Vec k4 = b(t + dt, x + dt * k3);
    x += (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    t = t_next;
    if (!all_finite(x)) throw divergence_error(n, "rk4_solve: non-finite state");
    path.grid.push_back(t);
    path.states.push_back(x);
    path.derivs.push_back(b(t, x));
  }
  return path;
}

ReferencePath filippov_solve(const DriftFn& b, const Vec& x0, double T, double h,
                             const std::vector<double>& delta_grid,
                             const std::function<Vec(double)>& closed_form,
                             bool* not_contracting) {
  if (closed_form) {
    ReferencePath path;
    path.method = ReferencePath::Method::kClosedForm;
    const double step = std::min(h, 1e-3);
    for (double t = 0.0;; t += step) {
      const double tc = std::min(t, T);
      path.grid.push_back(tc);
      path.states.push_back(closed_form(tc));
      if (tc >= T) break;
    }
    return path;
  }
  if (x0.size() != 1)
    throw std::invalid_argument("filippov_solve: mollified solve supports 1-D state only");
  if (delta_grid.size() < 2)
    throw std::invalid_argument("filippov_solve: need at least two mollification widths");

  static const HermiteRule rule = gauss_hermite(64);

  ReferencePath prev, current;
  double prev_gap = -1.0;
  if (not_contracting) *not_contracting = false;
  for (std::size_t d = 0; d < delta_grid.size(); ++d) {
    const double delta = delta_grid[d];
    DriftFn mollified = [&b, delta](double t, const Vec& x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        Vec y(1);
        y[0] = x[0] + std::numbers::sqrt2 * delta * rule.nodes[i];
        acc += rule.weights[i] * b(t, y)[0];
      }
      Vec out(1);
      out[0] = acc / std::sqrt(std::numbers::pi);
      return out;
    };
    current = rk4_solve(mollified, x0, T, h);
    if (d > 0) {
      double gap = 0.0;
      for (std::size_t i = 0; i < current.grid.size(); ++i)
        gap = std::max(gap, (current.states[i] - prev.evaluate(current.grid[i])).norm());
      if (prev_gap >= 0.0 && gap > prev_gap && not_contracting) *not_contracting = true;
      prev_gap = gap;
      current.accuracy = gap;
    }
    prev = current;
  }
  current.method = ReferencePath::Method::kMollified;
  return current;
}

std::pair<double, double> ou_exact(double theta, double sigma, double x0, double t) {
  if (!(theta > 0.0)) throw std::invalid_argument("ou_exact: theta > 0 required");
  const double mean = std::exp(-theta * t) * x0;
  const double var = sigma * sigma * (1.0 - std::exp(-2.0 * theta * t)) / (2.0 * theta);
  return {mean, var};
}

}  // namespace cpflow
