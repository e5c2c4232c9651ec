#include "dme/codec.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace dme {

std::size_t padded_dim(std::size_t d) noexcept { return std::bit_ceil(std::max<std::size_t>(d, 1)); }

void fwht(Eigen::Ref<Vector> v) {
  const auto m = static_cast<std::size_t>(v.size());
  if (!std::has_single_bit(m)) throw std::invalid_argument("fwht: size must be a power of two");
  for (std::size_t h = 1; h < m; h <<= 1) {
    for (std::size_t i = 0; i < m; i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = v(static_cast<Eigen::Index>(j));
        const double b = v(static_cast<Eigen::Index>(j + h));
        v(static_cast<Eigen::Index>(j)) = a + b;
        v(static_cast<Eigen::Index>(j + h)) = a - b;
      }
    }
  }
}

namespace {

Vector sign_diagonal(std::uint64_t seed, std::size_t m) {
  Rng rng(seed);
  Vector s(static_cast<Eigen::Index>(m));
  for (Eigen::Index j = 0; j < s.size(); ++j) s(j) = (rng.next() >> 63) ? -1.0 : 1.0;
  return s;
}

}  // namespace

Vector rotate(const ConstVecRef& x, std::uint64_t seed) {
  const std::size_t m = padded_dim(static_cast<std::size_t>(x.size()));
  Vector z = Vector::Zero(static_cast<Eigen::Index>(m));
  z.head(x.size()) = x;
  z.array() *= sign_diagonal(seed, m).array();
  fwht(z);
  return z / std::sqrt(static_cast<double>(m));
}

Vector unrotate(const ConstVecRef& y, std::uint64_t seed, std::size_t d) {
  const auto m = static_cast<std::size_t>(y.size());
  if (m != padded_dim(d)) throw std::invalid_argument("unrotate: length is not padded_dim(d)");
  Vector z = y;
  fwht(z);
  z.array() *= sign_diagonal(seed, m).array();
  z /= std::sqrt(static_cast<double>(m));
  return z.head(static_cast<Eigen::Index>(d));
}

Matrix rotate_rows(const Matrix& x, std::uint64_t seed) {
  const auto m = static_cast<Eigen::Index>(padded_dim(static_cast<std::size_t>(x.cols())));
  Matrix out(x.rows(), m);
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = rotate(x.row(i).transpose(), seed).transpose();
  return out;
}

}  // namespace dme
