#include "dme/wire.hpp"

#include <algorithm>
#include <string>

namespace dme {

Format parse_format(std::string_view name) {
  if (name == "naive") return Format::Naive;
  if (name == "varying" || name == "varying_length") return Format::VaryingLength;
  if (name == "sparse" || name == "sparse_indexed") return Format::SparseIndexed;
  if (name == "seeded" || name == "sparse_seeded") return Format::SparseSeeded;
  if (name == "binary") return Format::Binary;
  throw std::invalid_argument("unknown wire format '" + std::string(name) + "'");
}

std::string_view to_string(Format fmt) noexcept {
  switch (fmt) {
    case Format::Naive: return "naive";
    case Format::VaryingLength: return "varying_length";
    case Format::SparseIndexed: return "sparse_indexed";
    case Format::SparseSeeded: return "sparse_seeded";
    case Format::Binary: return "binary";
  }
  return "?";
}

namespace {

bool carries_center(Format fmt) {
  return fmt == Format::VaryingLength || fmt == Format::SparseIndexed || fmt == Format::SparseSeeded;
}

void write_center(BitStream& out, double center, const BitSizes& sizes) {
  if (sizes.r_bar == 0) {
    if (center != 0.0) throw std::invalid_argument("serialize: r_bar = 0 requires a zero center");
    return;
  }
  out.write_float(center, sizes.r);
}

double read_center(BitStream& in, const BitSizes& sizes) {
  return sizes.r_bar == 0 ? 0.0 : in.read_float(sizes.r);
}

std::size_t count_from_length(std::size_t body_bits, std::size_t unit, const char* what) {
  if (unit == 0 || body_bits % unit != 0) {
    throw WireError(std::string("deserialize: ") + what + " payload length is not a whole number of items");
  }
  return body_bits / unit;
}

void expect_consumed(const BitStream& in) {
  if (in.remaining() != 0) throw WireError("deserialize: trailing bits after payload");
}

}  // namespace

WireMessage serialize(const EncodedVector& y, const WireFormat& fmt) {
  const BitSizes& sz = fmt.sizes;
  sz.validate();
  y.validate();
  WireMessage msg{fmt.tag, y.node_id, {}};
  BitStream& out = msg.payload;
  if (carries_center(fmt.tag)) write_center(out, y.center, sz);

  switch (fmt.tag) {
    case Format::Naive: {
      const Vector dense = y.dense();
      for (Eigen::Index j = 0; j < dense.size(); ++j) out.write_float(dense(j), sz.r);
      break;
    }
    case Format::VaryingLength: {
      auto it = y.entries.begin();
      for (std::size_t j = 0; j < y.dim; ++j) {
        const bool listed = it != y.entries.end() && it->index == j;
        out.write_bit(listed);
        if (listed) out.write_float((it++)->value, sz.r);
      }
      break;
    }
    case Format::SparseIndexed: {
      const unsigned index_bits = ceil_log2(y.dim);
      for (const Entry& e : y.entries) {
        out.write(e.index, index_bits);
        out.write_float(e.value, sz.r);
      }
      break;
    }
    case Format::SparseSeeded: {
      if (!y.support) throw std::invalid_argument("serialize: SparseSeeded needs a seed-replayable support");
      const bool bernoulli = y.support->kind == SeededSupport::Kind::Bernoulli;
      if (bernoulli != fmt.seeded_p.has_value() || (bernoulli && *fmt.seeded_p != y.support->p)) {
        throw std::invalid_argument("serialize: support kind does not match the SparseSeeded format");
      }
      const auto indices = y.support->indices(y.dim);
      for (const Entry& e : y.entries) {
        if (!std::binary_search(indices.begin(), indices.end(), std::size_t{e.index})) {
          throw std::invalid_argument("serialize: entry outside the seeded support");
        }
      }
      out.write(y.support->seed, sz.r_seed);
      const Vector dense = y.dense();
      // Every selected coordinate is sent, even if equal to the center, so
      // the server can match values to replayed indices by position.
      for (std::size_t j : indices) out.write_float(dense(static_cast<Eigen::Index>(j)), sz.r);
      break;
    }
    case Format::Binary: {
      const Vector dense = y.dense();
      const double lo = dense.minCoeff();
      const double hi = dense.maxCoeff();
      for (Eigen::Index j = 0; j < dense.size(); ++j) {
        if (dense(j) != lo && dense(j) != hi) {
          throw std::invalid_argument("serialize: Binary format needs at most two distinct values");
        }
      }
      out.write_float(lo, sz.r);
      out.write_float(hi, sz.r);
      for (Eigen::Index j = 0; j < dense.size(); ++j) out.write_bit(dense(j) == hi && hi != lo);
      break;
    }
    default:
      throw std::invalid_argument("serialize: unknown format");
  }
  return msg;
}

EncodedVector deserialize(const WireMessage& msg, std::size_t d, const WireFormat& fmt) {
  if (msg.format != fmt.tag) throw WireError("deserialize: message format does not match the configured format");
  const BitSizes& sz = fmt.sizes;
  sz.validate();
  BitStream in = msg.payload;
  in.rewind();
  const auto dim = static_cast<Eigen::Index>(d);
  Vector dense(dim);
  double center = 0.0;
  std::optional<SeededSupport> support;

  switch (fmt.tag) {
    case Format::Naive: {
      if (in.bit_length() != d * sz.r) throw WireError("deserialize: Naive payload has wrong length");
      for (Eigen::Index j = 0; j < dim; ++j) dense(j) = in.read_float(sz.r);
      break;
    }
    case Format::VaryingLength: {
      center = read_center(in, sz);
      for (Eigen::Index j = 0; j < dim; ++j) dense(j) = in.read_bit() ? in.read_float(sz.r) : center;
      expect_consumed(in);
      break;
    }
    case Format::SparseIndexed: {
      center = read_center(in, sz);
      const unsigned index_bits = ceil_log2(d);
      const std::size_t count = count_from_length(in.remaining(), index_bits + sz.r, "SparseIndexed");
      dense.setConstant(center);
      std::uint64_t prev = 0;
      for (std::size_t s = 0; s < count; ++s) {
        const std::uint64_t j = in.read(index_bits);
        if (j >= d || (s > 0 && j <= prev)) throw WireError("deserialize: SparseIndexed index out of order or range");
        dense(static_cast<Eigen::Index>(j)) = in.read_float(sz.r);
        prev = j;
      }
      break;
    }
    case Format::SparseSeeded: {
      center = read_center(in, sz);
      const std::uint64_t seed = in.read(sz.r_seed);
      const std::size_t count = count_from_length(in.remaining(), sz.r, "SparseSeeded");
      if (fmt.seeded_p) {
        support = SeededSupport{SeededSupport::Kind::Bernoulli, seed, 0, *fmt.seeded_p};
      } else {
        if (count < 1 || count > d) throw WireError("deserialize: SparseSeeded subset size outside [1, d]");
        support = SeededSupport{SeededSupport::Kind::Subset, seed, count, 0.0};
      }
      const auto indices = support->indices(d);
      if (indices.size() != count) throw WireError("deserialize: SparseSeeded value count does not match the seed");
      dense.setConstant(center);
      for (std::size_t j : indices) dense(static_cast<Eigen::Index>(j)) = in.read_float(sz.r);
      break;
    }
    case Format::Binary: {
      if (in.bit_length() != 2 * sz.r + d) throw WireError("deserialize: Binary payload has wrong length");
      const double lo = in.read_float(sz.r);
      const double hi = in.read_float(sz.r);
      for (Eigen::Index j = 0; j < dim; ++j) dense(j) = in.read_bit() ? hi : lo;
      center = lo;
      break;
    }
    default:
      throw WireError("deserialize: unknown format");
  }

  EncodedVector out = EncodedVector::from_dense(msg.node_id, center, dense);
  out.support = support;
  return out;
}

BitStream frame(const WireMessage& msg) {
  if (msg.node_id >= (std::size_t{1} << kNodeIdBits)) throw std::invalid_argument("frame: node id exceeds 16 bits");
  BitStream out;
  out.write(static_cast<std::uint8_t>(msg.format), kTagBits);
  out.write(msg.node_id, kNodeIdBits);
  BitStream payload = msg.payload;
  payload.rewind();
  std::size_t left = payload.bit_length();
  while (left > 0) {
    const unsigned take = left >= 64 ? 64u : static_cast<unsigned>(left);
    out.write(payload.read(take), take);
    left -= take;
  }
  return out;
}

WireMessage unframe(BitStream framed) {
  framed.rewind();
  const auto tag = framed.read(kTagBits);
  if (tag > static_cast<std::uint64_t>(Format::Binary)) throw WireError("unframe: malformed format tag");
  WireMessage msg{static_cast<Format>(tag), static_cast<std::size_t>(framed.read(kNodeIdBits)), {}};
  while (framed.remaining() > 0) {
    const unsigned take = framed.remaining() >= 64 ? 64u : static_cast<unsigned>(framed.remaining());
    msg.payload.write(framed.read(take), take);
  }
  return msg;
}

std::vector<std::uint8_t> dump(const BitStream& bits) {
  if (bits.bit_length() > 0xFFFFFFFFull) throw std::invalid_argument("dump: stream longer than 2^32-1 bits");
  const auto len = static_cast<std::uint32_t>(bits.bit_length());
  std::vector<std::uint8_t> out{static_cast<std::uint8_t>(len >> 24), static_cast<std::uint8_t>(len >> 16),
                                static_cast<std::uint8_t>(len >> 8), static_cast<std::uint8_t>(len)};
  out.insert(out.end(), bits.bytes().begin(), bits.bytes().end());
  return out;
}

BitStream load_dump(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw WireError("load_dump: missing length prefix");
  const std::size_t len = (std::size_t{bytes[0]} << 24) | (std::size_t{bytes[1]} << 16) |
                          (std::size_t{bytes[2]} << 8) | std::size_t{bytes[3]};
  const std::size_t need = (len + 7) / 8;
  if (bytes.size() - 4 < need) throw WireError("load_dump: truncated bit string");
  return BitStream::from_bytes({bytes.begin() + 4, bytes.begin() + 4 + static_cast<std::ptrdiff_t>(need)}, len);
}

double expected_cost(Format fmt, const Matrix& probs, const BitSizes& sizes) {
  sizes.validate();
  const auto n = static_cast<double>(probs.rows());
  const auto d = static_cast<double>(probs.cols());
  const double r = sizes.r;
  const double total_p = probs.sum();
  switch (fmt) {
    case Format::Naive: return n * d * r;
    case Format::VaryingLength: return n * sizes.r_bar + n * d + r * total_p;
    case Format::SparseIndexed: return n * sizes.r_bar + (ceil_log2(probs.cols()) + r) * total_p;
    case Format::SparseSeeded:
      if (probs.size() > 0 && (probs.array() != probs(0, 0)).any()) {
        throw std::invalid_argument("expected_cost: SparseSeeded needs uniform probabilities");
      }
      return n * (sizes.r_bar + sizes.r_seed) + r * total_p;
    case Format::Binary: return n * 2.0 * r + n * d;
  }
  throw std::invalid_argument("expected_cost: unknown format");
}

double expected_cost_uniform(Format fmt, double p, const BitSizes& sizes, std::size_t n, std::size_t d) {
  sizes.validate();
  const auto nn = static_cast<double>(n);
  const auto dd = static_cast<double>(d);
  const double r = sizes.r;
  switch (fmt) {
    case Format::Naive: return nn * dd * r;
    case Format::VaryingLength: return nn * (sizes.r_bar + dd + p * dd * r);
    case Format::SparseIndexed: return nn * sizes.r_bar + (ceil_log2(d) + r) * nn * dd * p;
    case Format::SparseSeeded: return nn * (sizes.r_bar + sizes.r_seed) + nn * dd * p * r;
    case Format::Binary: return nn * 2.0 * r + nn * dd;
  }
  throw std::invalid_argument("expected_cost_uniform: unknown format");
}

double expected_cost_fixed(const BitSizes& sizes, std::size_t n, std::size_t k) {
  sizes.validate();
  const auto nn = static_cast<double>(n);
  return nn * (sizes.r_bar + sizes.r_seed) + nn * static_cast<double>(k) * sizes.r;
}

}  // namespace dme
