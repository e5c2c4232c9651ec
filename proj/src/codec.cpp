#include "dme/codec.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dme {

namespace {

void require_dims(const ConstVecRef& a, const ConstVecRef& b, const char* what) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

}  // namespace

void EncoderParams::validate(const Matrix& x) const {
  if (probs.rows() != x.rows() || probs.cols() != x.cols() || centers.size() != x.rows()) {
    throw std::invalid_argument("EncoderParams: shape does not match dataset");
  }
  if (!probs.allFinite() || !centers.allFinite()) throw std::invalid_argument("EncoderParams: non-finite value");
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double p = probs(i, j);
      if (p < 0.0 || p > 1.0) throw std::invalid_argument("EncoderParams: probability outside [0, 1]");
      if (p == 0.0 && x(i, j) != centers(i)) {
        throw std::invalid_argument("EncoderParams: zero probability where X differs from the center");
      }
    }
  }
}

EncoderParams EncoderParams::uniform(const Dataset& data, double p, const Vector& centers) {
  return EncoderParams{Matrix::Constant(data.n(), data.d(), p), centers};
}

void TernaryParams::validate(Eigen::Index n, Eigen::Index d) const {
  if (p_low.rows() != n || p_low.cols() != d || p_high.rows() != n || p_high.cols() != d ||
      low.size() != n || high.size() != n) {
    throw std::invalid_argument("TernaryParams: shape mismatch");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double a = p_low(i, j);
      const double b = p_high(i, j);
      if (!(a >= 0.0) || !(b >= 0.0) || !(a + b < 1.0)) {
        throw std::invalid_argument("TernaryParams: need p_low, p_high >= 0 and p_low + p_high < 1");
      }
    }
  }
}

std::vector<std::size_t> SeededSupport::indices(std::size_t d) const {
  return kind == Kind::Subset ? sample_subset(seed, d, k) : sample_bernoulli_support(seed, d, p);
}

Vector EncodedVector::dense() const {
  Vector out(static_cast<Eigen::Index>(dim));
  dense_into(out);
  return out;
}

void EncodedVector::dense_into(Eigen::Ref<Vector> out) const {
  out.setConstant(center);
  for (const Entry& e : entries) out(e.index) = e.value;
}

EncodedVector EncodedVector::from_dense(std::size_t node_id, double center, const ConstVecRef& dense) {
  EncodedVector out{node_id, static_cast<std::size_t>(dense.size()), center, {}, std::nullopt};
  for (Eigen::Index j = 0; j < dense.size(); ++j) {
    if (dense(j) != center) out.entries.push_back({static_cast<std::uint32_t>(j), dense(j)});
  }
  return out;
}

void EncodedVector::validate() const {
  for (std::size_t s = 0; s < entries.size(); ++s) {
    if (entries[s].index >= dim) throw std::invalid_argument("EncodedVector: index out of range");
    if (s > 0 && entries[s].index <= entries[s - 1].index) {
      throw std::invalid_argument("EncodedVector: indices not strictly ascending");
    }
    if (entries[s].value == center) throw std::invalid_argument("EncodedVector: listed value equals center");
  }
}

EncodedVector encode_variable(std::size_t node_id, const ConstVecRef& x, const ConstVecRef& probs,
                              double center, Rng& rng) {
  require_dims(x, probs, "encode_variable");
  EncodedVector out{node_id, static_cast<std::size_t>(x.size()), center, {}, std::nullopt};
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double p = probs(j);
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("encode_variable: probability outside [0, 1]");
    if (p == 0.0 && x(j) != center) {
      throw std::invalid_argument("encode_variable: zero probability on an entry that differs from the center");
    }
    if (!rng.bernoulli(p)) continue;
    const double y = p == 1.0 ? x(j) : x(j) / p - (1.0 - p) / p * center;
    if (y != center) out.entries.push_back({static_cast<std::uint32_t>(j), y});
  }
  return out;
}

EncodedVector encode_variable_seeded(std::size_t node_id, const ConstVecRef& x, double p, double center,
                                     std::uint64_t seed) {
  SeededSupport support{SeededSupport::Kind::Bernoulli, seed, 0, p};
  EncodedVector out{node_id, static_cast<std::size_t>(x.size()), center, {}, support};
  for (std::size_t j : support.indices(out.dim)) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double y = p == 1.0 ? x(jj) : x(jj) / p - (1.0 - p) / p * center;
    if (y != center) out.entries.push_back({static_cast<std::uint32_t>(j), y});
  }
  return out;
}

EncodedVector encode_fixed(std::size_t node_id, const ConstVecRef& x, std::size_t k, double center,
                           std::uint64_t seed) {
  const auto d = static_cast<std::size_t>(x.size());
  SeededSupport support{SeededSupport::Kind::Subset, seed, k, 0.0};
  EncodedVector out{node_id, d, center, {}, support};
  const double scale = static_cast<double>(d) / static_cast<double>(k);
  const double shift = static_cast<double>(d - std::min(k, d)) / static_cast<double>(k);
  for (std::size_t j : support.indices(d)) {
    const double y = scale * x(static_cast<Eigen::Index>(j)) - shift * center;
    if (y != center) out.entries.push_back({static_cast<std::uint32_t>(j), y});
  }
  return out;
}

EncodedVector encode_fixed(std::size_t node_id, const ConstVecRef& x, const FixedSupportParams& params) {
  if (node_id >= params.seeds.size() || static_cast<Eigen::Index>(node_id) >= params.centers.size()) {
    throw std::invalid_argument("encode_fixed: node has no seed/center");
  }
  return encode_fixed(node_id, x, params.k, params.centers(static_cast<Eigen::Index>(node_id)),
                      params.seeds[node_id]);
}

EncodedVector encode_binary_quant(std::size_t node_id, const ConstVecRef& x, Rng& rng) {
  const double lo = x.minCoeff();
  const double hi = x.maxCoeff();
  EncodedVector out{node_id, static_cast<std::size_t>(x.size()), lo, {}, std::nullopt};
  const double delta = hi - lo;
  if (delta == 0.0) return out;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (rng.bernoulli((x(j) - lo) / delta)) out.entries.push_back({static_cast<std::uint32_t>(j), hi});
  }
  return out;
}

Vector encode_ternary(const ConstVecRef& x, const ConstVecRef& p_low, const ConstVecRef& p_high, double low,
                      double high, Rng& rng) {
  require_dims(x, p_low, "encode_ternary");
  require_dims(x, p_high, "encode_ternary");
  Vector y(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double a = p_low(j);
    const double b = p_high(j);
    if (!(a >= 0.0) || !(b >= 0.0) || !(a + b < 1.0)) {
      throw std::invalid_argument("encode_ternary: need p_low, p_high >= 0 and p_low + p_high < 1");
    }
    const double u = rng.uniform();
    if (u < a) {
      y(j) = low;
    } else if (u < a + b) {
      y(j) = high;
    } else {
      y(j) = (x(j) - a * low - b * high) / (1.0 - a - b);
    }
  }
  return y;
}

Vector encode_ternary(const ConstVecRef& x, const TernaryParams& params, Eigen::Index node, Rng& rng) {
  return encode_ternary(x, params.p_low.row(node).transpose(), params.p_high.row(node).transpose(),
                        params.low(node), params.high(node), rng);
}

Vector decode_average(std::span<const EncodedVector> encoded, std::size_t d) {
  if (encoded.empty()) throw std::invalid_argument("decode_average: no encoded vectors");
  std::vector<std::size_t> order(encoded.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return encoded[a].node_id < encoded[b].node_id; });

  const auto dim = static_cast<Eigen::Index>(d);
  Vector sum = Vector::Zero(dim);
  Vector scratch(dim);
  for (std::size_t idx : order) {
    const EncodedVector& y = encoded[idx];
    if (y.dim != d) throw std::invalid_argument("decode_average: dimension mismatch");
    y.dense_into(scratch);
    sum += scratch;
  }
  return sum / static_cast<double>(encoded.size());
}

}  // namespace dme
