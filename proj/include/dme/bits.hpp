#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace dme {

/// Raised when a bit string is truncated or structurally invalid.
class WireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * Bit widths used for cost accounting and on the wire.
 *   r      - one floating value (16, 32 or 64; IEEE binary16/32/64)
 *   r_bar  - one node center (0 when the center is data independent, else r)
 *   r_seed - one random seed (always 64)
 */
struct BitSizes {
  unsigned r = 16;
  unsigned r_bar = 16;
  unsigned r_seed = 64;

  static BitSizes with_float_bits(unsigned r, bool send_center = true) {
    return BitSizes{r, send_center ? r : 0u, 64u};
  }

  /// Throws std::invalid_argument when the widths violate the invariants.
  void validate() const;

  friend bool operator==(const BitSizes&, const BitSizes&) = default;
};

/// ceil(log2(d)) for d >= 1; the width of one coordinate index on the wire.
constexpr unsigned ceil_log2(std::uint64_t d) noexcept {
  unsigned bits = 0;
  while (bits < 64 && (std::uint64_t{1} << bits) < d) ++bits;
  return bits;
}

std::uint16_t double_to_half_bits(double v) noexcept;  // round to nearest even
double half_bits_to_double(std::uint16_t h) noexcept;

/// The value `v` becomes after a round trip through an r-bit IEEE float.
double narrow_to(double v, unsigned r);

/**
 * Append-only bit buffer with a read cursor. Fields are written least
 * significant bit first; bit b of the stream lives in byte b/8 at position b%8.
 */
class BitStream {
 public:
  BitStream() = default;

  /// Wraps `bit_length` bits of an existing byte buffer (cursor at 0).
  static BitStream from_bytes(std::vector<std::uint8_t> bytes, std::size_t bit_length);

  void write(std::uint64_t value, unsigned width);
  void write_bit(bool bit) { write(bit ? 1u : 0u, 1); }
  /// IEEE-754 encoding of `v` narrowed to r bits.
  void write_float(double v, unsigned r);

  std::uint64_t read(unsigned width);
  bool read_bit() { return read(1) != 0; }
  double read_float(unsigned r);

  std::size_t bit_length() const noexcept { return bit_length_; }
  std::size_t cursor() const noexcept { return cursor_; }
  std::size_t remaining() const noexcept { return bit_length_ - cursor_; }
  void rewind() noexcept { cursor_ = 0; }
  std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }

  friend bool operator==(const BitStream& a, const BitStream& b) {
    return a.bit_length_ == b.bit_length_ && a.bytes_ == b.bytes_;
  }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bit_length_ = 0;
  std::size_t cursor_ = 0;
};

}  // namespace dme
