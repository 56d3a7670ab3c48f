#pragma once

#include <cstddef>
#include <cstdint>

namespace collact {

// Counter-based generator: the i-th output is splitmix64(seed + i * golden).
// The stream depends only on (seed, counter), never on platform libraries, so
// equal seeds give bit-identical streams everywhere. Instances are cheap
// values; give each worker its own (fork) rather than sharing one.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "splitmix64-ctr";

  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  // Standard normal via Box-Muller (one draw per call, no caching).
  double normal();

  // Exponential(1).
  double exponential();

  // Independent child stream keyed by `stream`. Forking does not advance the
  // parent, so fork(k) is a pure function of (seed, k).
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace collact
