#ifndef CPFLOW_STATS_HPP
#define CPFLOW_STATS_HPP

#include <functional>
#include <string>
#include <vector>

#include "cpflow/reference.hpp"
#include "cpflow/scheme.hpp"

namespace cpflow {

// One row of an experiment report; `ci` is the 95% normal half-width.
struct ErrorRow {
  std::string scenario;
  std::string param_name;
  double param = 0.0;
  std::string metric;
  double estimate = 0.0;
  double ci = 0.0;
  std::size_t replicas = 0;
};

struct ErrorReport {
  std::vector<ErrorRow> rows;
  double slope = 0.0;
  double slope_stderr = 0.0;
  std::vector<std::string> warnings;
};

// Sample mean and its 95% CI half-width (normal approximation).
std::pair<double, double> mean_ci(const std::vector<double>& samples);

// E sup_{t<=T} |X^eps_t - X_t|^2: the sup is scanned over every scheme jump
// time (left and right values) and every reference grid node.
std::pair<double, double> strong_error(const std::vector<SchemePath>& paths,
                                       const ReferencePath& ref);

// |mean(samples) - exact| where samples are phi(X^eps_T) draws; CI is that of
// the sample mean.
std::pair<double, double> weak_error(const std::vector<double>& phi_samples, double exact);

struct RateFit {
  double slope = 0.0;
  double std_err = 0.0;
  std::vector<std::string> warnings;
};

// OLS of log(estimate) on log(parameter). Nonpositive estimates are dropped
// with a warning; fewer than 3 surviving points is an error.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points);

// sup |empirical CDF - cdf| by the sorted-sample formula; needs >= 100 samples.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

// Exact empirical 1-D Wasserstein-1: mean |sorted_a - sorted_b|. Unequal
// counts are handled by nearest-rank quantile resampling to the larger size.
double wasserstein1_1d(std::vector<double> a, std::vector<double> b);

// Time-average of g over [burn_in, horizon] along a piecewise-constant path,
// computed exactly from the event intervals.
double invariant_time_average(const SchemePath& path, double burn_in, double horizon,
                              const std::function<double(const Vec&)>& g);

// Limit variance of Z_T = (X^eps_T - X_T)/sqrt(eps) for a 1-D drift-only
// scheme: int_0^T exp(2 int_s^T b'(r, X_r) dr) b(s, X_s)^2 ds, trapezoidal
// quadrature along the reference path.
double clt_limit_variance(const DriftFn& b, const DriftFn& b_prime, const ReferencePath& ref);

}  // namespace cpflow

#endif
