#include <cmath>
#include <stdexcept>

#include "cpflow/errors.hpp"
#include "cpflow/reference.hpp"
#include "doctest.h"

using namespace cpflow;

namespace {

Vec v1(double x) {
  Vec v(1);
  v[0] = x;
  return v;
}

DriftFn decay = [](double, const Vec& x) { return Vec(-x); };

}  // namespace

TEST_CASE("rk4 solves the exponential to near machine accuracy") {
  auto p = rk4_solve(decay, v1(1.0), 1.0, 1e-3);
  CHECK(std::abs(p.evaluate(1.0)[0] - std::exp(-1.0)) < 1e-9);
  // dense output between nodes
  CHECK(std::abs(p.evaluate(0.51234)[0] - std::exp(-0.51234)) < 1e-9);
}

TEST_CASE("rk4 keeps a zero-drift path constant") {
  auto p = rk4_solve([](double, const Vec& x) { return Vec(Vec::Zero(x.size())); }, v1(3.0), 1.0,
                     0.1);
  for (double t : {0.0, 0.35, 1.0}) CHECK(p.evaluate(t)[0] == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("rk4 error shrinks 16x when h halves") {
  auto err = [](double h) {
    auto p = rk4_solve(decay, v1(1.0), 1.0, h);
    return std::abs(p.evaluate(1.0)[0] - std::exp(-1.0));
  };
  const double ratio = err(0.1) / err(0.05);
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("rk4 rejects bad steps and flags divergence") {
  CHECK_THROWS_AS(rk4_solve(decay, v1(1.0), 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rk4_solve([](double, const Vec& x) { return Vec(x * 1e10); }, v1(1.0), 10.0, 0.5),
                  divergence_error);
}

TEST_CASE("mollified solve recovers the sticking Filippov solution") {
  DriftFn sign_drift = [](double, const Vec& x) {
    return v1(x[0] > 0 ? -1.0 : (x[0] < 0 ? 1.0 : 0.0));
  };
  bool warn = false;
  auto p = filippov_solve(sign_drift, v1(1.0), 2.0, 1e-3, {1e-1, 1e-2, 1e-3}, nullptr, &warn);
  for (double t : {0.25, 0.75, 1.0, 1.5, 2.0}) {
    const double exact = std::max(1.0 - t, 0.0);
    CHECK(std::abs(p.evaluate(t)[0] - exact) < 10.0 * 1e-3);
  }
  CHECK(p.accuracy < 0.05);
}

TEST_CASE("filippov solution started at the sticking point stays there") {
  DriftFn sign_drift = [](double, const Vec& x) {
    return v1(x[0] > 0 ? -1.0 : (x[0] < 0 ? 1.0 : 0.0));
  };
  auto p = filippov_solve(sign_drift, v1(0.0), 1.0, 1e-3);
  for (double t : {0.1, 0.5, 1.0}) CHECK(std::abs(p.evaluate(t)[0]) < 1e-6);
}

TEST_CASE("mollified solve agrees with rk4 on a smooth drift") {
  DriftFn smooth = [](double t, const Vec& x) { return v1(std::sin(x[0]) + std::cos(t)); };
  auto a = filippov_solve(smooth, v1(0.3), 1.0, 1e-3, {1e-2, 1e-3, 1e-4});
  auto b = rk4_solve(smooth, v1(0.3), 1.0, 1e-3);
  for (double t : {0.2, 0.6, 1.0}) CHECK(std::abs(a.evaluate(t)[0] - b.evaluate(t)[0]) < 1e-6);
}

TEST_CASE("closed-form scenarios bypass mollification") {
  auto cf = [](double t) {
    Vec v(1);
    v[0] = std::max(1.0 - t, 0.0);
    return v;
  };
  auto p = filippov_solve(nullptr, v1(1.0), 2.0, 1e-3, {}, cf);
  CHECK(p.method == ReferencePath::Method::kClosedForm);
  CHECK(p.evaluate(1.7)[0] == doctest::Approx(0.0));
  CHECK(p.evaluate(0.25)[0] == doctest::Approx(0.75));
}

TEST_CASE("OU moments") {
  auto [m0, v0] = ou_exact(1.0, 1.0, 1.0, 0.0);
  CHECK(m0 == 1.0);
  CHECK(v0 == 0.0);
  auto [m1, var1] = ou_exact(1.0, 1.0, 1.0, 1.0);
  CHECK(m1 == doctest::Approx(0.367879).epsilon(1e-5));
  CHECK(var1 == doctest::Approx(0.432332).epsilon(1e-5));
  auto [minf, vinf] = ou_exact(1.0, 1.0, 0.0, 60.0);
  CHECK(vinf == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(minf) < 1e-12);
}
