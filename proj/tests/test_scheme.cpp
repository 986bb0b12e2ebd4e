#include <cmath>
#include <random>
#include <stdexcept>

#include "cpflow/errors.hpp"
#include "cpflow/scheme.hpp"
#include "doctest.h"

using namespace cpflow;

namespace {

Vec v1(double x) {
  Vec v(1);
  v[0] = x;
  return v;
}

CoefficientSet linear_drift_1d() {
  CoefficientSet c;
  c.dim = 1;
  c.drift = [](double, const Vec& x) { return Vec(-x); };
  c.m = 1.0;
  c.taming_enabled = false;
  return c;
}

CoefficientSet additive_noise_1d() {
  CoefficientSet c;
  c.dim = 1;
  c.diffusion = [](double, const Vec&, const Vec& z) { return z; };
  c.alpha = 2.0;
  return c;
}

}  // namespace

TEST_CASE("taming formula and bound") {
  CHECK(tame_drift(v1(0.0), 2.0, 0.5)[0] == 0.0);
  // m=2, |b|=4, eps=0.25: 0.25*4 / (1 + 0.5*2) = 0.5
  CHECK(tame_drift(v1(4.0), 2.0, 0.25)[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(tame_drift(v1(1.0), 0.5, 0.1), std::invalid_argument);

  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> ub(-50.0, 50.0), um(1.0, 6.0), ue(1e-4, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double b = ub(gen), m = um(gen), eps = ue(gen);
    const double out = std::abs(tame_drift(v1(b), m, eps)[0]);
    const double bound = std::min(eps * std::abs(b), std::sqrt(eps) * std::pow(std::abs(b), 1.0 / m));
    CHECK(out <= bound * (1.0 + 1e-12));
  }
}

TEST_CASE("diffusion scaling by stability index") {
  CoefficientSet c = additive_noise_1d();
  CHECK(scale_diffusion(c, 0.04, 0.0, v1(0.0), v1(1.0))[0] == doctest::Approx(0.2));
  c.alpha = 1.0;
  CHECK(scale_diffusion(c, 0.1, 0.0, v1(0.0), v1(3.0))[0] == doctest::Approx(0.3));
  CHECK(scale_diffusion(c, 0.1, 0.0, v1(5.0), v1(0.0))[0] == 0.0);
}

TEST_CASE("single transition") {
  CoefficientSet noise = additive_noise_1d();
  CHECK(step(0.0, v1(1.0), 0.1, v1(1.0), noise, 0.04)[0] == doctest::Approx(1.2));
  CHECK(step(0.0, v1(1.0), 0.1, v1(0.0), noise, 0.04)[0] == doctest::Approx(1.0));
  CoefficientSet drift = linear_drift_1d();
  CHECK(step(0.0, v1(1.0), 0.1, v1(0.0), drift, 0.1)[0] == doctest::Approx(0.9));
  CHECK_THROWS_AS(step(0.5, v1(1.0), 0.5, v1(0.0), drift, 0.1), std::invalid_argument);
}

TEST_CASE("divergence guard carries the event index") {
  CoefficientSet c;
  c.dim = 1;
  c.drift = [](double, const Vec& x) { return Vec(x * 1e30); };
  try {
    step(0.0, v1(1.0), 0.1, v1(0.0), c, 1.0, 42);
    FAIL("expected divergence");
  } catch (const divergence_error& e) {
    CHECK(e.event_index() == 42);
  }
}

TEST_CASE("path evaluation is cadlag") {
  SchemePath p;
  p.x0 = v1(0.0);
  p.eps = 0.1;
  p.horizon = 1.0;
  p.times = {0.2, 0.5, 0.9};
  p.states = {v1(1.0), v1(2.0), v1(3.0)};
  CHECK(p.evaluate(0.0)[0] == 0.0);
  CHECK(p.evaluate(0.3)[0] == 1.0);
  CHECK(p.evaluate(0.5)[0] == 2.0);  // right-continuous at a jump
  CHECK(p.evaluate(1.0)[0] == 3.0);
  CHECK(p.left_limit(1)[0] == 0.0);
  CHECK(p.left_limit(2)[0] == 1.0);
  CHECK_THROWS_AS(p.evaluate(1.5), std::out_of_range);
}

TEST_CASE("constant drift accumulates eps*c per event") {
  CoefficientSet c;
  c.dim = 1;
  c.drift = [](double, const Vec& x) { return Vec(Vec::Constant(x.size(), 3.0)); };
  auto law = build_jump_law(2.0, 1, std::nullopt);
  double mean = 0;
  const int reps = 4000;
  const double eps = 0.01;
  for (int r = 0; r < reps; ++r) {
    auto s = derive_stream(31, {{StreamLabel::kReplica, (std::uint64_t)r}});
    auto p = simulate_path(c, v1(1.0), eps, 1.0, law, s);
    CHECK(p.evaluate(1.0)[0] ==
          doctest::Approx(1.0 + eps * 3.0 * double(p.event_count())).epsilon(1e-12));
    mean += p.evaluate(1.0)[0];
  }
  mean /= reps;
  // E X_1 = 1 + 3, clock std = 3*eps*sqrt(1/eps)/sqrt(reps) = 0.0047
  CHECK(std::abs(mean - 4.0) < 0.02);
}

TEST_CASE("second moment of the linear scheme follows the exact recursion") {
  CoefficientSet c = linear_drift_1d();
  auto law = build_jump_law(2.0, 1, std::nullopt);
  const double eps = 0.1;
  const int reps = 20000;
  double sum2 = 0;
  for (int r = 0; r < reps; ++r) {
    auto s = derive_stream(57, {{StreamLabel::kReplica, (std::uint64_t)r}});
    const double x = simulate_path(c, v1(1.0), eps, 1.0, law, s).evaluate(1.0)[0];
    sum2 += x * x;
  }
  const double est = sum2 / reps;
  const double exact = std::exp(eps - 2.0);
  // 4-std-error band; fourth moment exp(((1-eps)^4-1)/eps)
  const double m4 = std::exp((std::pow(1.0 - eps, 4) - 1.0) / eps);
  const double se = std::sqrt((m4 - exact * exact) / reps);
  CHECK(std::abs(est - exact) < 4.0 * se);
}

TEST_CASE("splicing a path at an event boundary reproduces it") {
  CoefficientSet c = linear_drift_1d();
  c.diffusion = [](double, const Vec&, const Vec& z) { return z; };
  c.alpha = 2.0;
  auto law = build_jump_law(2.0, 1, std::nullopt);
  auto s = derive_stream(99, {{StreamLabel::kReplica, 0}});
  auto p = simulate_path(c, v1(0.5), 0.05, 1.0, law, s);
  REQUIRE(p.event_count() >= 4);
  // restart from event k: fold the remaining recorded events manually
  const std::size_t k = p.event_count() / 2;
  Vec state = p.states[k - 1];
  double t_prev = p.times[k - 1];
  auto jump_stream = s.derive({StreamLabel::kJump, 0});
  std::vector<Vec> jumps;
  for (std::size_t n = 0; n < p.event_count(); ++n) {
    auto z = law.sample(jump_stream);
    jumps.push_back(v1(z[0]));
  }
  for (std::size_t n = k; n < p.event_count(); ++n) {
    state = step(t_prev, state, p.times[n], jumps[n], c, 0.05, n + 1);
    t_prev = p.times[n];
    CHECK(state[0] == p.states[n][0]);
  }
}

TEST_CASE("discrete generator on exact finite sums") {
  auto law = build_jump_law(2.0, 1, std::nullopt);
  CoefficientSet c = linear_drift_1d();
  CHECK(generator_apply([](const Vec&) { return 3.0; }, 0.0, v1(1.0), c, law, 0.1) ==
        doctest::Approx(0.0));
  CHECK(generator_apply([](const Vec& x) { return x[0]; }, 0.0, v1(2.0), c, law, 0.1) ==
        doctest::Approx(-2.0).epsilon(1e-12));
  CoefficientSet noise = additive_noise_1d();
  CHECK(generator_apply([](const Vec& x) { return x[0] * x[0]; }, 0.0, v1(1.7), noise, law, 0.01) ==
        doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("generator matches the short-time Monte-Carlo rate") {
  CoefficientSet c = linear_drift_1d();
  c.diffusion = [](double, const Vec&, const Vec& z) { return z; };
  c.alpha = 2.0;
  auto law = build_jump_law(2.0, 1, std::nullopt);
  const double eps = 0.05, h = eps / 10.0;
  const Vec x = v1(0.8);
  auto f = [](const Vec& y) { return std::cos(y[0]); };
  const double gen = generator_apply(f, 0.0, x, c, law, eps);
  const int reps = 200000;
  double acc = 0, acc2 = 0;
  for (int r = 0; r < reps; ++r) {
    auto s = derive_stream(7171, {{StreamLabel::kReplica, (std::uint64_t)r}});
    const double val = (f(simulate_path(c, x, eps, h, law, s).evaluate(h)) - f(x)) / h;
    acc += val;
    acc2 += val * val;
  }
  const double mean = acc / reps;
  const double se = std::sqrt((acc2 / reps - mean * mean) / reps);
  CHECK(std::abs(mean - gen) < 4.0 * se + 1e-3);
}

TEST_CASE("generator approaches the stable limit generator as eps shrinks") {
  // f in C^2_b, additive stable noise: |L^(eps) f - L^(0) f| should shrink.
  CoefficientSet c;
  c.dim = 1;
  c.alpha = 1.5;
  c.diffusion = [](double, const Vec&, const Vec& z) { return z; };
  auto law = build_jump_law(1.5, 1, 1e5);
  auto f = [](const Vec& x) { return 1.0 / (1.0 + x[0] * x[0]); };
  const Vec x = v1(0.3);
  // limit generator: c0 * int_0^inf [f(x+w) + f(x-w) - 2 f(x)] w^{-1-alpha} dw
  // (symmetrized principal value). Quadrature after substitutions w = u^4 on
  // (0,1] and w = 1/u on [1,inf), both of which regularize the endpoints.
  const double alpha = 1.5;
  auto g = [&](double w) { return f(v1(x[0] + w)) + f(v1(x[0] - w)) - 2.0 * f(x); };
  // (0, delta]: g(w) ~ f''(x) w^2, so the piece integrates to f'' delta^{2-alpha}/(2-alpha)
  const double delta = 1e-3;
  const double x0 = x[0];
  const double fpp = (6.0 * x0 * x0 - 2.0) / std::pow(1.0 + x0 * x0, 3.0);
  double integral = fpp * std::pow(delta, 2.0 - alpha) / (2.0 - alpha);
  // [delta, 1]: Simpson in t = log w; [1, inf): Simpson in u = 1/w
  auto simpson = [](auto h, double a, double b, int n) {
    const double dt = (b - a) / n;
    double s = h(a) + h(b);
    for (int i = 1; i < n; ++i) s += h(a + i * dt) * (i % 2 ? 4.0 : 2.0);
    return s * dt / 3.0;
  };
  integral += simpson([&](double t) { return g(std::exp(t)) * std::exp(-alpha * t); },
                      std::log(delta), 0.0, 4000);
  integral += simpson([&](double u) {
                        return u == 0.0 ? 0.0 : g(1.0 / u) * std::pow(u, alpha - 1.0);
                      },
                      0.0, 1.0, 4000);
  const double limit = law.normalizer() * integral;
  double prev_gap = 1e100;
  for (double eps : {0.1, 0.01, 0.001}) {
    const double gap = std::abs(generator_apply(f, 0.0, x, c, law, eps) - limit);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
}

TEST_CASE("jacobian determinants for a rotation drift") {
  CoefficientSet c;
  c.dim = 2;
  c.drift = [](double, const Vec& x) {
    Vec b(2);
    b[0] = x[1];
    b[1] = -x[0];
    return b;
  };
  c.drift_grad = [](double, const Vec&) {
    Mat g(2, 2);
    g << 0, 1, -1, 0;
    return g;
  };
  auto law = build_jump_law(2.0, 2, std::nullopt);
  Vec x0(2);
  x0 << 1.0, 0.0;
  auto s = derive_stream(8, {{StreamLabel::kReplica, 0}});
  const double eps = 0.05;
  auto p = simulate_path(c, x0, eps, 1.0, law, s);
  auto rep = path_jacobian(p, c);
  REQUIRE(rep.determinants.size() == p.event_count());
  for (std::size_t n = 0; n < rep.determinants.size(); ++n)
    CHECK(rep.determinants[n] ==
          doctest::Approx(std::pow(1.0 + eps * eps, double(n + 1))).epsilon(1e-10));
  CHECK_FALSE(rep.singular);

  CoefficientSet no_grad = linear_drift_1d();
  SchemePath trivial;
  trivial.x0 = v1(0.0);
  CHECK_THROWS_AS(path_jacobian(trivial, no_grad), std::logic_error);
}

TEST_CASE("zero-drift path keeps the identity jacobian") {
  CoefficientSet c;
  c.dim = 1;
  c.drift = [](double, const Vec& x) { return Vec(Vec::Zero(x.size())); };
  c.drift_grad = [](double, const Vec&) { return Mat(Mat::Zero(1, 1)); };
  c.diffusion = [](double, const Vec&, const Vec& z) { return z; };
  auto law = build_jump_law(2.0, 1, std::nullopt);
  auto s = derive_stream(12, {{StreamLabel::kReplica, 0}});
  auto p = simulate_path(c, v1(0.0), 0.1, 1.0, law, s);
  for (double det : path_jacobian(p, c).determinants) CHECK(det == 1.0);
}
