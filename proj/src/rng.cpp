#include "dme/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dme {

std::uint64_t Rng::below(std::uint64_t bound) noexcept {
  // Lemire's nearly-divisionless method.
  auto m = static_cast<unsigned __int128>(next()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(next()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Rng::normal() noexcept {
  const double u1 = uniform_open0();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::size_t> sample_subset(std::uint64_t seed, std::size_t d, std::size_t k) {
  if (k < 1 || k > d) {
    throw std::invalid_argument("sample_subset: k=" + std::to_string(k) +
                                " outside [1, " + std::to_string(d) + "]");
  }
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(d - i));
    std::swap(perm[i], perm[j]);
  }
  perm.resize(k);
  std::sort(perm.begin(), perm.end());
  return perm;
}

std::vector<std::size_t> sample_bernoulli_support(std::uint64_t seed, std::size_t d, double p) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::invalid_argument("sample_bernoulli_support: p must lie in (0, 1]");
  }
  std::vector<std::size_t> out;
  Rng rng(seed);
  for (std::size_t j = 0; j < d; ++j) {
    if (rng.bernoulli(p)) out.push_back(j);
  }
  return out;
}

}  // namespace dme
