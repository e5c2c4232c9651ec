#include "dme/bits.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

namespace dme {

void BitSizes::validate() const {
  if (r != 16 && r != 32 && r != 64) {
    throw std::invalid_argument("BitSizes: r must be 16, 32 or 64 (got " + std::to_string(r) + ")");
  }
  if (r_bar != 0 && r_bar != r) {
    throw std::invalid_argument("BitSizes: r_bar must be 0 or r");
  }
  if (r_seed != 64) throw std::invalid_argument("BitSizes: r_seed must be 64");
}

std::uint16_t double_to_half_bits(double v) noexcept {
  const auto b = std::bit_cast<std::uint64_t>(v);
  const auto sign = static_cast<std::uint16_t>((b >> 48) & 0x8000u);
  const auto exp = static_cast<int>((b >> 52) & 0x7FF);
  const std::uint64_t frac = b & ((std::uint64_t{1} << 52) - 1);

  if (exp == 0x7FF) return static_cast<std::uint16_t>(sign | 0x7C00u | (frac ? 0x0200u : 0u));
  if (exp == 0) return sign;  // double subnormals are far below the half range

  int he = exp - 1023 + 15;
  if (he >= 31) return static_cast<std::uint16_t>(sign | 0x7C00u);

  const std::uint64_t m = frac | (std::uint64_t{1} << 52);
  // 42 bits drop for a normal half; subnormals drop 1 - he more.
  const int shift = he >= 1 ? 42 : 42 + (1 - he);
  if (shift > 60) return sign;

  std::uint64_t keep = m >> shift;
  const std::uint64_t rem = m & ((std::uint64_t{1} << shift) - 1);
  const std::uint64_t halfway = std::uint64_t{1} << (shift - 1);
  if (rem > halfway || (rem == halfway && (keep & 1u))) ++keep;

  if (he >= 1) {
    if (keep == (std::uint64_t{1} << 11)) {
      keep >>= 1;
      ++he;
      if (he >= 31) return static_cast<std::uint16_t>(sign | 0x7C00u);
    }
    return static_cast<std::uint16_t>(sign | (he << 10) | (keep & 0x3FFu));
  }
  // Rounding up into 0x400 lands exactly on the smallest normal.
  return static_cast<std::uint16_t>(sign | keep);
}

double half_bits_to_double(std::uint16_t h) noexcept {
  const bool neg = (h & 0x8000u) != 0;
  const int exp = (h >> 10) & 0x1F;
  const int frac = h & 0x3FF;
  double mag;
  if (exp == 0) {
    mag = std::ldexp(static_cast<double>(frac), -24);
  } else if (exp == 31) {
    mag = frac ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
  } else {
    mag = std::ldexp(static_cast<double>(frac | 0x400), exp - 25);
  }
  return neg ? -mag : mag;
}

double narrow_to(double v, unsigned r) {
  switch (r) {
    case 16: return half_bits_to_double(double_to_half_bits(v));
    case 32: return static_cast<double>(static_cast<float>(v));
    case 64: return v;
    default: throw std::invalid_argument("narrow_to: unsupported float width " + std::to_string(r));
  }
}

BitStream BitStream::from_bytes(std::vector<std::uint8_t> bytes, std::size_t bit_length) {
  if (bytes.size() * 8 < bit_length) throw WireError("BitStream: byte buffer shorter than bit length");
  BitStream s;
  bytes.resize((bit_length + 7) / 8);
  if (bit_length % 8 != 0) {
    // Padding bits past the end are not part of the stream.
    bytes.back() &= static_cast<std::uint8_t>((1u << (bit_length % 8)) - 1);
  }
  s.bytes_ = std::move(bytes);
  s.bit_length_ = bit_length;
  return s;
}

void BitStream::write(std::uint64_t value, unsigned width) {
  if (width > 64) throw std::invalid_argument("BitStream::write: width > 64");
  if (width < 64) value &= (std::uint64_t{1} << width) - 1;
  bytes_.resize((bit_length_ + width + 7) / 8, 0);
  while (width > 0) {
    const std::size_t byte = bit_length_ / 8;
    const unsigned off = bit_length_ % 8;
    const unsigned take = std::min(8u - off, width);
    const auto chunk = static_cast<std::uint8_t>(value & ((1u << take) - 1));
    bytes_[byte] |= static_cast<std::uint8_t>(chunk << off);
    value >>= take;
    width -= take;
    bit_length_ += take;
  }
}

std::uint64_t BitStream::read(unsigned width) {
  if (width > 64) throw std::invalid_argument("BitStream::read: width > 64");
  if (width > remaining()) {
    throw WireError("BitStream: truncated stream (need " + std::to_string(width) + " bits, have " +
                    std::to_string(remaining()) + ")");
  }
  std::uint64_t value = 0;
  unsigned got = 0;
  while (got < width) {
    const std::size_t byte = cursor_ / 8;
    const unsigned off = cursor_ % 8;
    const unsigned take = std::min(8u - off, width - got);
    const std::uint64_t chunk = (bytes_[byte] >> off) & ((1u << take) - 1);
    value |= chunk << got;
    got += take;
    cursor_ += take;
  }
  return value;
}

void BitStream::write_float(double v, unsigned r) {
  switch (r) {
    case 16: write(double_to_half_bits(v), 16); break;
    case 32: write(std::bit_cast<std::uint32_t>(static_cast<float>(v)), 32); break;
    case 64: write(std::bit_cast<std::uint64_t>(v), 64); break;
    default: throw std::invalid_argument("write_float: unsupported float width " + std::to_string(r));
  }
}

double BitStream::read_float(unsigned r) {
  switch (r) {
    case 16: return half_bits_to_double(static_cast<std::uint16_t>(read(16)));
    case 32: return static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(read(32))));
    case 64: return std::bit_cast<double>(read(64));
    default: throw std::invalid_argument("read_float: unsupported float width " + std::to_string(r));
  }
}

}  // namespace dme
