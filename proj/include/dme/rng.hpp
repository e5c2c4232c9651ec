#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace dme {

inline constexpr std::uint64_t kSplitMixIncrement = 0x9E3779B97F4A7C15ULL;

/// splitmix64 output finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// One step of the splitmix64 recurrence: returns (next state, output).
constexpr std::pair<std::uint64_t, std::uint64_t> rng_next(std::uint64_t state) noexcept {
  const std::uint64_t next = state + kSplitMixIncrement;
  return {next, mix64(next)};
}

/**
 * splitmix64 generator. The whole state is one 64-bit word, so a seed fully
 * determines the stream on every platform. Every random draw in the library
 * goes through this type.
 */
class Rng {
 public:
  explicit constexpr Rng(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    const auto [s, out] = rng_next(state_);
    state_ = s;
    return out;
  }

  constexpr std::uint64_t state() const noexcept { return state_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; safe to pass to log().
  double uniform_open0() noexcept { return 1.0 - uniform(); }

  /// Unbiased integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept;

  /// True with probability p (p <= 0 never, p >= 1 always).
  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Standard normal via Box-Muller (one variate per call).
  double normal() noexcept;

 private:
  std::uint64_t state_;
};

/// Child seed for stream `index` of a parent seed. Used for per-trial and per-node seeds.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return mix64(base + (index + 1) * kSplitMixIncrement);
}

/**
 * Uniformly random k-subset of {0, ..., d-1}, returned ascending.
 *
 * Partial Fisher-Yates over an identity permutation driven by Rng(seed); the
 * first k slots are the subset. The server side of the seeded sparse format
 * calls this with the transmitted seed to recover the indices, so the exact
 * draw order here is part of the wire contract.
 *
 * Throws std::invalid_argument unless 1 <= k <= d.
 */
std::vector<std::size_t> sample_subset(std::uint64_t seed, std::size_t d, std::size_t k);

/**
 * Support mask for the seeded variable-size encoder with uniform probability p:
 * index j is selected iff the j-th uniform draw of Rng(seed) is below p.
 */
std::vector<std::size_t> sample_bernoulli_support(std::uint64_t seed, std::size_t d, double p);

}  // namespace dme
