#pragma once

#include "dme/dataset.hpp"
#include "dme/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dme {

using ConstVecRef = Eigen::Ref<const Vector>;

/**
 * Parameters of the variable-size-support encoder: one probability per entry
 * and one center per node. A zero probability is accepted only where the
 * entry already equals its node center, otherwise the encoder is biased.
 */
struct EncoderParams {
  Matrix probs;    // n x d, each in [0, 1]
  Vector centers;  // n

  /// Throws std::invalid_argument on shape mismatch, out-of-range or zero-where-nonzero probabilities.
  void validate(const Matrix& x) const;

  static EncoderParams uniform(const Dataset& data, double p, const Vector& centers);
};

/// Fixed-size-support encoder: every node keeps exactly k coordinates chosen by its seed.
struct FixedSupportParams {
  std::size_t k = 1;
  Vector centers;
  std::vector<std::uint64_t> seeds;
};

/**
 * Three-valued encoder. Per entry, Y takes `low` with probability p_low,
 * `high` with probability p_high and an unbiasing third value otherwise.
 * `low` and `high` are per node; p_low + p_high < 1 strictly.
 */
struct TernaryParams {
  Matrix p_low;   // n x d
  Matrix p_high;  // n x d
  Vector low;     // n
  Vector high;    // n

  void validate(Eigen::Index n, Eigen::Index d) const;
};

struct Entry {
  std::uint32_t index = 0;
  double value = 0.0;
  friend bool operator==(const Entry&, const Entry&) = default;
};

/// How a seeded encoder picked its support; the server replays this from the seed alone.
struct SeededSupport {
  enum class Kind { Subset, Bernoulli };
  Kind kind = Kind::Subset;
  std::uint64_t seed = 0;
  std::size_t k = 0;  // Subset
  double p = 0.0;     // Bernoulli

  std::vector<std::size_t> indices(std::size_t d) const;
};

/**
 * One node's encoded vector, stored as its center plus the coordinates whose
 * value differs from it (ascending index). Unlisted coordinates equal the center.
 */
struct EncodedVector {
  std::size_t node_id = 0;
  std::size_t dim = 0;
  double center = 0.0;
  std::vector<Entry> entries;
  std::optional<SeededSupport> support;

  Vector dense() const;
  void dense_into(Eigen::Ref<Vector> out) const;

  /// Sparse view of a dense vector relative to `center`.
  static EncodedVector from_dense(std::size_t node_id, double center, const ConstVecRef& dense);

  /// Throws std::invalid_argument when indices are unsorted/out of range or a value equals the center.
  void validate() const;
};

/// Y(j) = x(j)/p_j - ((1 - p_j)/p_j) * mu with probability p_j, else mu.
EncodedVector encode_variable(std::size_t node_id, const ConstVecRef& x, const ConstVecRef& probs,
                              double center, Rng& rng);

/// Variable-size encoder with one probability p whose support is replayable from `seed`.
EncodedVector encode_variable_seeded(std::size_t node_id, const ConstVecRef& x, double p, double center,
                                     std::uint64_t seed);

/// Y(j) = (d/k) x(j) - ((d-k)/k) mu on a seed-chosen k-subset, mu elsewhere.
EncodedVector encode_fixed(std::size_t node_id, const ConstVecRef& x, std::size_t k, double center,
                           std::uint64_t seed);
EncodedVector encode_fixed(std::size_t node_id, const ConstVecRef& x, const FixedSupportParams& params);

/**
 * Randomized binary quantization between the row minimum and maximum.
 * Same distribution as encode_variable with mu = min, p = (x - min)/(max - min).
 */
EncodedVector encode_binary_quant(std::size_t node_id, const ConstVecRef& x, Rng& rng);

Vector encode_ternary(const ConstVecRef& x, const ConstVecRef& p_low, const ConstVecRef& p_high, double low,
                      double high, Rng& rng);
Vector encode_ternary(const ConstVecRef& x, const TernaryParams& params, Eigen::Index node, Rng& rng);

/// Average of the dense reconstructions, summed in node_id order.
Vector decode_average(std::span<const EncodedVector> encoded, std::size_t d);

// Randomized Hadamard rotation -------------------------------------------------

/// Smallest power of two >= d.
std::size_t padded_dim(std::size_t d) noexcept;

/// In-place unnormalized Walsh-Hadamard transform; size must be a power of two.
void fwht(Eigen::Ref<Vector> v);

/// (1/sqrt(m)) H D pad(x), D a seed-derived +-1 diagonal, m = padded_dim(d).
Vector rotate(const ConstVecRef& x, std::uint64_t seed);
/// Exact inverse of rotate, truncated back to the first d coordinates.
Vector unrotate(const ConstVecRef& y, std::uint64_t seed, std::size_t d);

/// Rotates every row; the result has padded_dim(d) columns.
Matrix rotate_rows(const Matrix& x, std::uint64_t seed);

}  // namespace dme
