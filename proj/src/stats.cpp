#include "cpflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cpflow {

std::pair<double, double> mean_ci(const std::vector<double>& samples) {
  if (samples.empty()) throw std::invalid_argument("mean_ci: no samples");
  double sum = 0.0;
  for (double v : samples) sum += v;
  const double mean = sum / double(samples.size());
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double var = samples.size() > 1 ? ss / double(samples.size() - 1) : 0.0;
  return {mean, 1.96 * std::sqrt(var / double(samples.size()))};
}

std::pair<double, double> strong_error(const std::vector<SchemePath>& paths,
                                       const ReferencePath& ref) {
  std::vector<double> sups;
  sups.reserve(paths.size());
  const double T = ref.grid.back();
  for (const auto& path : paths) {
    double sup = (path.x0 - ref.states.front()).norm();
    // just before and at each jump
    for (std::size_t n = 0; n < path.times.size(); ++n) {
      const double s = std::min(path.times[n], T);
      const Vec r = ref.evaluate(s);
      sup = std::max(sup, (path.left_limit(n + 1) - r).norm());
      sup = std::max(sup, (path.states[n] - r).norm());
      if (path.times[n] >= T) break;
    }
    // at reference nodes (scheme constant there, reference moves)
    for (std::size_t i = 0; i < ref.grid.size(); ++i) {
      const double s = ref.grid[i];
      if (s > path.horizon) break;
      sup = std::max(sup, (path.evaluate(s) - ref.states[i]).norm());
    }
    sups.push_back(sup * sup);
  }
  return mean_ci(sups);
}

std::pair<double, double> weak_error(const std::vector<double>& phi_samples, double exact) {
  auto [mean, ci] = mean_ci(phi_samples);
  return {std::abs(mean - exact), ci};
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
  RateFit fit;
  std::vector<double> xs, ys;
  for (const auto& [param, est] : points) {
    if (!(param > 0.0)) throw std::invalid_argument("fit_rate: parameters must be positive");
    if (!(est > 0.0)) {
      fit.warnings.push_back("fit_rate: dropped nonpositive estimate at parameter " +
                             std::to_string(param));
      continue;
    }
    xs.push_back(std::log(param));
    ys.push_back(std::log(est));
  }
  const auto n = xs.size();
  if (n < 3) throw std::invalid_argument("fit_rate: fewer than 3 usable points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  const double intercept = my - fit.slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - intercept - fit.slope * xs[i];
    rss += r * r;
  }
  fit.std_err = n > 2 ? std::sqrt(rss / double(n - 2) / sxx) : 0.0;
  return fit;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.size() < 100) throw std::invalid_argument("ks_statistic: need >= 100 samples");
  std::sort(samples.begin(), samples.end());
  const double n = double(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double F = cdf(samples[i]);
    d = std::max(d, std::max(F - double(i) / n, double(i + 1) / n - F));
  }
  return d;
}

double wasserstein1_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein1_1d: empty sample set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t m = std::max(a.size(), b.size());
  auto quantile = [m](const std::vector<double>& v, std::size_t i) {
    // nearest-rank quantile at (i + 1/2) / m
    const auto j = static_cast<std::size_t>((double(i) + 0.5) / double(m) * double(v.size()));
    return v[std::min(j, v.size() - 1)];
  };
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) acc += std::abs(quantile(a, i) - quantile(b, i));
  return acc / double(m);
}

double invariant_time_average(const SchemePath& path, double burn_in, double horizon,
                              const std::function<double(const Vec&)>& g) {
  if (!(burn_in < horizon)) throw std::invalid_argument("invariant_time_average: burn_in < horizon");
  if (horizon > path.horizon + 1e-12)
    throw std::invalid_argument("invariant_time_average: horizon beyond the path");
  double acc = 0.0;
  double t = burn_in;
  Vec value = path.evaluate(burn_in);
  const auto first = static_cast<std::size_t>(
      std::upper_bound(path.times.begin(), path.times.end(), burn_in) - path.times.begin());
  for (std::size_t n = first; n < path.times.size() && path.times[n] < horizon; ++n) {
    acc += g(value) * (path.times[n] - t);
    t = path.times[n];
    value = path.states[n];
  }
  acc += g(value) * (horizon - t);
  return acc / (horizon - burn_in);
}

double clt_limit_variance(const DriftFn& b, const DriftFn& b_prime, const ReferencePath& ref) {
  const auto n = ref.grid.size();
  // A(s) = int_0^s b'(r, X_r) dr (trapezoid), then
  // int_0^T exp(2 (A(T) - A(s))) b(s, X_s)^2 ds.
  std::vector<double> A(n, 0.0), b2(n), bp(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec& x = ref.states[i];
    b2[i] = std::pow(b(ref.grid[i], x)[0], 2.0);
    bp[i] = b_prime(ref.grid[i], x)[0];
  }
  for (std::size_t i = 1; i < n; ++i)
    A[i] = A[i - 1] + 0.5 * (bp[i - 1] + bp[i]) * (ref.grid[i] - ref.grid[i - 1]);
  double acc = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double f0 = std::exp(2.0 * (A.back() - A[i - 1])) * b2[i - 1];
    const double f1 = std::exp(2.0 * (A.back() - A[i])) * b2[i];
    acc += 0.5 * (f0 + f1) * (ref.grid[i] - ref.grid[i - 1]);
  }
  return acc;
}

}  // namespace cpflow
