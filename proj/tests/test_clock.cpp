#include <cmath>
#include <numbers>

#include "cpflow/clock.hpp"
#include "cpflow/errors.hpp"
#include "doctest.h"

using namespace cpflow;

TEST_CASE("required_iterations evaluates the budget formula") {
  CHECK(required_iterations(0.01, 1.0, 20) == 192);
  CHECK(required_iterations(0.3, 0.0, 7) == 7);
  CHECK(required_iterations(1.0, 1.0, 0) == 2);
}

TEST_CASE("zero horizon gives an empty clock") {
  auto s = derive_stream(1, {{StreamLabel::kClock, 0}});
  auto clock = build_clock(0.1, 0.0, s);
  CHECK(clock.jump_times.empty());
  CHECK(clock.count(0.0) == 0);
}

TEST_CASE("jump times are strictly increasing and count is cadlag") {
  auto s = derive_stream(3, {{StreamLabel::kClock, 0}});
  auto clock = build_clock(0.05, 2.0, s);
  REQUIRE(clock.jump_times.size() >= 2);
  for (std::size_t i = 1; i < clock.jump_times.size(); ++i)
    CHECK(clock.jump_times[i] > clock.jump_times[i - 1]);
  const double s1 = clock.jump_times[0];
  CHECK(clock.count(s1) == 1);                  // right-continuous at a jump
  CHECK(clock.count(std::nextafter(s1, 0.0)) == 0);
  CHECK(clock.jump_times.back() > 2.0);         // overshoot retained
}

TEST_CASE("event count has mean t/eps") {
  const double eps = 0.01;
  const int reps = 10000;
  double total = 0;
  for (int r = 0; r < reps; ++r) {
    auto s = derive_stream(77, {{StreamLabel::kReplica, (std::uint64_t)r}, {StreamLabel::kClock, 0}});
    total += double(build_clock(eps, 1.0, s).count(1.0));
  }
  const double mean = total / reps;
  CHECK(mean > 97.0);
  CHECK(mean < 103.0);
}

TEST_CASE("tail of the event count decays at the stated rate") {
  const double eps = 0.01;
  const int reps = 20000;
  const std::size_t threshold = required_iterations(eps, 1.0, 5);  // 172 + 5
  int exceed = 0;
  for (int r = 0; r < reps; ++r) {
    auto s = derive_stream(123, {{StreamLabel::kReplica, (std::uint64_t)r}, {StreamLabel::kClock, 0}});
    if (build_clock(eps, 1.0, s).count(1.0) >= threshold) ++exceed;
  }
  const double p_hat = double(exceed) / reps;
  const double bound = std::exp(-5.0);
  const double se = std::sqrt(bound * (1.0 - bound) / reps);
  CHECK(p_hat <= bound + 3.0 * se);
}
