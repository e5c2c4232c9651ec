#pragma once

#include "dme/codec.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace dme {

struct IdentityEncoder {};
struct VariableEncoder {
  EncoderParams params;
};
/// Uniform-probability variable encoder whose support is replayable from the node seed.
struct SeededVariableEncoder {
  double p = 1.0;
  Vector centers;
};
struct FixedEncoder {
  std::size_t k = 1;
  Vector centers;
};
struct BinaryQuantEncoder {};
struct TernaryEncoder {
  TernaryParams params;
};

using EncoderConfig = std::variant<IdentityEncoder, VariableEncoder, SeededVariableEncoder, FixedEncoder,
                                   BinaryQuantEncoder, TernaryEncoder>;

/**
 * Encoder plus optional shared random rotation. With a rotation seed every
 * node rotates its vector before encoding and the server unrotates the
 * average, so encoder parameters must be sized for padded_dim(d).
 */
struct Pipeline {
  EncoderConfig encoder;
  std::optional<std::uint64_t> rotation_seed;
};

std::string encoder_name(const EncoderConfig& encoder);

/// Width of the vectors the encoder sees (d, or padded_dim(d) under rotation).
std::size_t encoded_dim(const Pipeline& pipeline, std::size_t d) noexcept;

/// Throws std::invalid_argument if the encoder parameters do not fit `encoder_input`.
void validate(const EncoderConfig& encoder, const Matrix& encoder_input);

/**
 * Encode node `node`'s vector (already rotated when the pipeline rotates).
 * All randomness, including seeded supports, derives from `node_seed`.
 */
EncodedVector encode_node(const EncoderConfig& encoder, std::size_t node, const ConstVecRef& x,
                          std::uint64_t node_seed);

/// Rows the encoders see: X itself, or every row rotated.
Matrix encoder_input(const Pipeline& pipeline, const Matrix& x);

/// Server-side tail of the pipeline: unrotate the averaged estimate when needed.
Vector finish_decode(const Pipeline& pipeline, Vector average, std::size_t d);

}  // namespace dme
