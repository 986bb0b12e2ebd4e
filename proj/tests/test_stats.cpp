#include <cmath>
#include <random>
#include <stdexcept>

#include "cpflow/stats.hpp"
#include "doctest.h"

using namespace cpflow;

namespace {

Vec v1(double x) {
  Vec v(1);
  v[0] = x;
  return v;
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("mean and confidence interval") {
  auto [m, ci] = mean_ci({1.0, 2.0, 3.0});
  CHECK(m == doctest::Approx(2.0));
  CHECK(ci == doctest::Approx(1.96 * std::sqrt(1.0 / 3.0)));
  CHECK_THROWS_AS(mean_ci({}), std::invalid_argument);
}

TEST_CASE("strong error is zero for a matching path and positive after a jump") {
  ReferencePath ref;
  ref.grid = {0.0, 0.5, 1.0};
  ref.states = {v1(3.0), v1(3.0), v1(3.0)};
  SchemePath flat;
  flat.x0 = v1(3.0);
  flat.horizon = 1.0;
  auto [e0, c0] = strong_error({flat}, ref);
  CHECK(e0 == 0.0);
  SchemePath jumped = flat;
  jumped.times = {0.5};
  jumped.states = {v1(4.0)};
  auto [e1, c1] = strong_error({jumped}, ref);
  CHECK(e1 == doctest::Approx(1.0));
}

TEST_CASE("weak error against a known value") {
  auto [e, ci] = weak_error({2.0, 2.0, 2.0, 2.0}, 1.5);
  CHECK(e == doctest::Approx(0.5));
  CHECK(ci == 0.0);
  auto [e2, ci2] = weak_error({7.0, 7.0}, 7.0);
  CHECK(e2 == doctest::Approx(0.0));
}

TEST_CASE("rate fit on exact and noisy power laws") {
  std::vector<std::pair<double, double>> exact;
  for (double x : {0.1, 0.2, 0.4, 0.8}) exact.push_back({x, std::sqrt(x)});
  auto fit = fit_rate(exact);
  CHECK(fit.slope == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fit.std_err < 1e-10);

  std::mt19937_64 gen(4);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<std::pair<double, double>> noisy;
  for (double x : {0.05, 0.1, 0.2, 0.4, 0.8}) noisy.push_back({x, 2.0 * x * std::exp(noise(gen))});
  auto nf = fit_rate(noisy);
  CHECK(nf.slope == doctest::Approx(1.0).epsilon(0.1));

  CHECK_THROWS_AS(fit_rate({{0.1, 1.0}, {0.2, 2.0}}), std::invalid_argument);

  auto dropped = fit_rate({{0.1, 1.0}, {0.2, 2.0}, {0.4, 4.0}, {0.8, -1.0}});
  CHECK(dropped.warnings.size() == 1);
  CHECK(dropped.slope == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("KS statistic") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> samples;
  for (int i = 0; i < 5000; ++i) samples.push_back(u(gen));
  CHECK(ks_statistic(samples, [](double x) { return std::clamp(x, 0.0, 1.0); }) < 0.03);

  std::vector<double> atom(1000, 0.5);
  CHECK(ks_statistic(atom, [](double x) { return std::clamp(x, 0.0, 1.0); }) >= 0.5);

  std::normal_distribution<double> n05(0.5, 1.0);
  std::vector<double> shifted;
  for (int i = 0; i < 5000; ++i) shifted.push_back(n05(gen));
  CHECK(ks_statistic(shifted, norm_cdf) > 0.1);

  CHECK_THROWS_AS(ks_statistic({1.0, 2.0}, norm_cdf), std::invalid_argument);
}

TEST_CASE("1-D Wasserstein distance") {
  std::vector<double> a{1.0, 2.0, 3.0};
  CHECK(wasserstein1_1d(a, a) == 0.0);
  CHECK(wasserstein1_1d({2.0, 2.0}, {5.0, 5.0}) == doctest::Approx(3.0));

  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x, y;
  for (int i = 0; i < 10000; ++i) {
    x.push_back(u(gen));
    y.push_back(u(gen) + 0.3);
  }
  CHECK(wasserstein1_1d(x, y) == doctest::Approx(0.3).epsilon(0.04));

  // triangle inequality on three random sets
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p, q, r;
    for (int i = 0; i < 200; ++i) {
      p.push_back(n(gen));
      q.push_back(n(gen) * 2.0 + 0.5);
      r.push_back(u(gen) * 3.0);
    }
    CHECK(wasserstein1_1d(p, r) <= wasserstein1_1d(p, q) + wasserstein1_1d(q, r) + 1e-12);
  }
}

TEST_CASE("time average over a piecewise-constant path") {
  SchemePath p;
  p.x0 = v1(1.0);
  p.horizon = 4.0;
  p.times = {1.0, 3.0};
  p.states = {v1(2.0), v1(5.0)};
  // window [0,4]: 1*1 + 2*2 + 5*1 over length 4
  CHECK(invariant_time_average(p, 0.0, 4.0, [](const Vec& x) { return x[0]; }) ==
        doctest::Approx(10.0 / 4.0));
  // window [0.5, 3.5]: 1*0.5 + 2*2 + 5*0.5 over 3
  CHECK(invariant_time_average(p, 0.5, 3.5, [](const Vec& x) { return x[0]; }) ==
        doctest::Approx(7.0 / 3.0));
  CHECK(invariant_time_average(p, 0.0, 4.0, [](const Vec&) { return 8.0; }) ==
        doctest::Approx(8.0));
}

TEST_CASE("limit variance quadrature for the linear drift") {
  DriftFn b = [](double, const Vec& x) { return Vec(-x); };
  DriftFn bp = [](double, const Vec& x) { return Vec(Vec::Constant(x.size(), -1.0)); };
  auto ref = rk4_solve(b, v1(1.0), 1.0, 1e-3);
  CHECK(clt_limit_variance(b, bp, ref) == doctest::Approx(std::exp(-2.0)).epsilon(1e-6));
}
