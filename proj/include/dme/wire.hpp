#pragma once

#include "dme/bits.hpp"
#include "dme/codec.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace dme {

/// Communication protocols. The numeric value is the 3-bit tag in the frame header.
enum class Format : std::uint8_t {
  Naive = 0,          // d floats
  VaryingLength = 1,  // center, then per coordinate a flag bit and an optional float
  SparseIndexed = 2,  // center, then (index, float) pairs for the support
  SparseSeeded = 3,   // center, seed, then one float per seed-selected coordinate
  Binary = 4,         // two floats, then one selector bit per coordinate
};

Format parse_format(std::string_view name);
std::string_view to_string(Format fmt) noexcept;

struct WireFormat {
  Format tag = Format::Naive;
  BitSizes sizes;
  /// SparseSeeded over the uniform-p variable encoder: the server replays a
  /// Bernoulli(p) mask. Unset means a fixed-size k-subset, k read off the length.
  std::optional<double> seeded_p;
};

/// One node's payload. bit_length() is exactly the protocol's per-node cost.
struct WireMessage {
  Format format = Format::Naive;
  std::size_t node_id = 0;
  BitStream payload;

  std::size_t bit_length() const noexcept { return payload.bit_length(); }
};

inline constexpr unsigned kTagBits = 3;
inline constexpr unsigned kNodeIdBits = 16;
/// Frame header (tag + node id); not part of the protocol cost.
inline constexpr unsigned kHeaderBits = kTagBits + kNodeIdBits;

/**
 * Serialize one encoded vector. Floats are narrowed to sizes.r bits with
 * round-to-nearest-even. Payload length:
 *   Naive          d*r
 *   VaryingLength  r_bar + d + r*|S|
 *   SparseIndexed  r_bar + |S|*(ceil(log2 d) + r)
 *   SparseSeeded   r_bar + r_seed + r*|support drawn from the seed|
 *   Binary         2r + d
 * Throws std::invalid_argument when the vector does not fit the format
 * (Binary with more than two values, SparseSeeded without a seed, a nonzero
 * center with r_bar = 0).
 */
WireMessage serialize(const EncodedVector& y, const WireFormat& fmt);

/// Inverse of serialize given d out of band. Throws WireError on truncated or malformed payloads.
EncodedVector deserialize(const WireMessage& msg, std::size_t d, const WireFormat& fmt);

/// Header + payload as one bit string.
BitStream frame(const WireMessage& msg);
WireMessage unframe(BitStream framed);

/// Dump layout: 32-bit big-endian bit count, then the bits packed LSB-first into bytes.
std::vector<std::uint8_t> dump(const BitStream& bits);
BitStream load_dump(std::span<const std::uint8_t> bytes);

/**
 * Expected total bits over all n nodes (rows of `probs`) for the
 * variable-size encoder with these probabilities. SparseSeeded requires all
 * probabilities equal.
 */
double expected_cost(Format fmt, const Matrix& probs, const BitSizes& sizes);

/// Same, for a single probability p on every entry.
double expected_cost_uniform(Format fmt, double p, const BitSizes& sizes, std::size_t n, std::size_t d);

/// Deterministic SparseSeeded cost of the fixed-size encoder: n(r_bar + r_seed) + n k r.
double expected_cost_fixed(const BitSizes& sizes, std::size_t n, std::size_t k);

}  // namespace dme
