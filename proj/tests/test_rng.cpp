#include <cmath>
#include <stdexcept>
#include <vector>

#include "cpflow/rng.hpp"
#include "doctest.h"

using namespace cpflow;

TEST_CASE("identical seed and labels reproduce the stream") {
  auto a = derive_stream(42, {{StreamLabel::kReplica, 7}, {StreamLabel::kPurpose, 1}});
  auto b = derive_stream(42, {{StreamLabel::kReplica, 7}, {StreamLabel::kPurpose, 1}});
  for (int i = 0; i < 32; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct labels give distinct, uncorrelated streams") {
  auto a = derive_stream(42, {{StreamLabel::kReplica, 0}});
  auto b = derive_stream(42, {{StreamLabel::kReplica, 1}});
  CHECK(a.key() != b.key());
  const int n = 100000;
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (int i = 0; i < n; ++i) {
    const double u = a.next_uniform(), v = b.next_uniform();
    sa += u;
    sb += v;
    saa += u * u;
    sbb += v * v;
    sab += u * v;
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  const double va = saa / n - (sa / n) * (sa / n);
  const double vb = sbb / n - (sb / n) * (sb / n);
  CHECK(std::abs(cov / std::sqrt(va * vb)) < 0.02);
}

TEST_CASE("empty label tuple is rejected") {
  CHECK_THROWS_AS(derive_stream(1, {}), std::invalid_argument);
}

TEST_CASE("derive appends to the label tuple") {
  auto root = derive_stream(9, {{StreamLabel::kReplica, 3}});
  auto child = root.derive({StreamLabel::kParticle, 5});
  auto direct = derive_stream(9, {{StreamLabel::kReplica, 3}, {StreamLabel::kParticle, 5}});
  CHECK(child.key() == direct.key());
  CHECK(child.next_u64() == direct.next_u64());
}

TEST_CASE("exponential inverse CDF") {
  CHECK(exponential_from_uniform(0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(exponential_from_uniform(0.0) == 0.0);
}

TEST_CASE("uniform draws live in [0,1) and exponential mean is 1") {
  auto s = derive_stream(2024, {{StreamLabel::kPurpose, 0}});
  const int n = 100000;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    const double u = s.next_uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += exponential_from_uniform(u);
  }
  CHECK(sum / n > 0.99);
  CHECK(sum / n < 1.01);
}
