#ifndef CPFLOW_RNG_HPP
#define CPFLOW_RNG_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cpflow {

// A (role, index) pair naming one sub-stream: e.g. {replica, 3} or {particle, 17}.
struct StreamLabel {
  enum Role : std::uint32_t {
    kReplica = 1,
    kParticle = 2,
    kClock = 3,
    kJump = 4,
    kInit = 5,
    kCloud = 6,
    kPoint = 7,
    kSlice = 8,
    kPath = 9,
    kPurpose = 10,
  };
  std::uint32_t role;
  std::uint64_t index;
};

// Counter-based splittable stream. The generator state is a pure function of
// (root_seed, labels); distinct label tuples give statistically independent
// sequences (splitmix64 key separation). A stream is single-owner: derive
// disjoint sub-streams instead of sharing one across tasks.
class RngStream {
public:
  RngStream(std::uint64_t root_seed, std::span<const StreamLabel> labels);

  // Appends labels to this stream's label tuple.
  RngStream derive(std::span<const StreamLabel> labels) const;
  RngStream derive(StreamLabel label) const;

  std::uint64_t next_u64();

  // Uniform on [0,1), 53-bit mantissa.
  double next_uniform();

  // Exp(1) via inverse CDF, -log1p(-u); u in [0,1) keeps the argument finite.
  double next_exponential();

  std::uint64_t key() const { return key_; }

private:
  RngStream(std::uint64_t key, std::uint64_t root_seed) : key_(key), root_seed_(root_seed) {}

  std::uint64_t key_;
  std::uint64_t root_seed_;
  std::uint64_t counter_ = 0;
};

// Builds a stream from a root seed and a nonempty label tuple.
// Throws std::invalid_argument on an empty tuple.
RngStream derive_stream(std::uint64_t root_seed, std::span<const StreamLabel> labels);
RngStream derive_stream(std::uint64_t root_seed, std::initializer_list<StreamLabel> labels);

// Pure inverse-CDF map used by next_exponential; exposed for direct checks.
double exponential_from_uniform(double u);

}  // namespace cpflow

#endif
