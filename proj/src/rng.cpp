#include "cpflow/rng.hpp"

#include <stdexcept>

namespace cpflow {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer (Steele/Lea/Flood); full avalanche on 64 bits.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t absorb_label(std::uint64_t key, const StreamLabel& label) {
  key = mix64(key ^ mix64(static_cast<std::uint64_t>(label.role) * kGamma + 1));
  key = mix64(key ^ mix64(label.index + kGamma));
  return key;
}

}  // namespace

RngStream::RngStream(std::uint64_t root_seed, std::span<const StreamLabel> labels)
    : root_seed_(root_seed) {
  std::uint64_t key = mix64(root_seed + kGamma);
  for (const auto& label : labels) key = absorb_label(key, label);
  key_ = key;
}

RngStream RngStream::derive(std::span<const StreamLabel> labels) const {
  std::uint64_t key = key_;
  for (const auto& label : labels) key = absorb_label(key, label);
  return RngStream(key, root_seed_);
}

RngStream RngStream::derive(StreamLabel label) const {
  return RngStream(absorb_label(key_, label), root_seed_);
}

std::uint64_t RngStream::next_u64() {
  // Counter-based: output n is a pure function of (key, n).
  return mix64(key_ + (++counter_) * kGamma);
}

double RngStream::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_exponential() {
  return exponential_from_uniform(next_uniform());
}

double exponential_from_uniform(double u) {
  return -std::log1p(-u);
}

RngStream derive_stream(std::uint64_t root_seed, std::span<const StreamLabel> labels) {
  if (labels.empty()) throw std::invalid_argument("derive_stream: empty label tuple");
  return RngStream(root_seed, labels);
}

RngStream derive_stream(std::uint64_t root_seed, std::initializer_list<StreamLabel> labels) {
  return derive_stream(root_seed, std::span<const StreamLabel>(labels.begin(), labels.size()));
}

}  // namespace cpflow
