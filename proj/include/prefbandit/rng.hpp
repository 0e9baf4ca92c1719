#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace prefbandit {

// Self-contained xoshiro256++ generator. Distributions are implemented here
// rather than taken from <random> so that streams are bit-reproducible across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();
  // Uniform on (0, 1); safe as a log/Box-Muller input.
  double uniform01_open();
  // Standard normal via Box-Muller.
  double normal();
  std::vector<double> normal_vector(std::size_t n);
  bool bernoulli(double p);
  // Index distributed per `weights` (non-negative, summing to ~1).
  int categorical(const std::vector<double>& weights);

 private:
  std::uint64_t state_[4];
};

// Stable 64-bit hash of a role label, mixed into a seed. Every consumer of
// randomness draws from its own named substream so that enabling one consumer
// never perturbs another.
std::uint64_t mix_seed(std::uint64_t seed, std::string_view role);

Rng derive_stream(std::uint64_t base_seed, std::string_view role);
Rng derive_stream(std::uint64_t base_seed, std::string_view role,
                  std::uint64_t index);

}  // namespace prefbandit
