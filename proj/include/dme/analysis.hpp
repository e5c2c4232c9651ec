#pragma once

#include "dme/codec.hpp"
#include "dme/pipeline.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace dme {

/**
 * Closed-form MSE of the variable-size encoder with averaging decoder:
 *
 *   (1/n^2) * sum_ij (1/p_ij - 1) (X_i(j) - mu_i)^2
 *
 * Entries equal to their center contribute nothing whatever their probability
 * (0/0 read as 0). A non-positive probability elsewhere throws.
 */
template <typename DX, typename DP, typename DC>
typename DX::Scalar mse_closed_variable(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DP>& probs,
                                        const Eigen::MatrixBase<DC>& centers) {
  using Scalar = typename DX::Scalar;
  if (probs.rows() != x.rows() || probs.cols() != x.cols() || centers.size() != x.rows()) {
    throw std::invalid_argument("mse_closed_variable: shape mismatch");
  }
  Scalar acc(0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const Scalar dev = x(i, j) - centers(i);
      if (dev == Scalar(0)) continue;
      const Scalar p = probs(i, j);
      if (!(p > Scalar(0))) throw std::invalid_argument("mse_closed_variable: zero probability on a deviating entry");
      acc += (Scalar(1) / p - Scalar(1)) * dev * dev;
    }
  }
  const auto n = static_cast<Scalar>(x.rows());
  return acc / (n * n);
}

/// Closed-form MSE of the fixed-size-support encoder: (1/n^2) sum_ij ((d-k)/k)(X_i(j) - mu_i)^2.
template <typename DX, typename DC>
typename DX::Scalar mse_closed_fixed(const Eigen::MatrixBase<DX>& x, std::size_t k,
                                     const Eigen::MatrixBase<DC>& centers) {
  using Scalar = typename DX::Scalar;
  const auto d = static_cast<std::size_t>(x.cols());
  if (k < 1 || k > d) throw std::invalid_argument("mse_closed_fixed: k must be in [1, d]");
  if (centers.size() != x.rows()) throw std::invalid_argument("mse_closed_fixed: shape mismatch");
  Scalar acc(0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const Scalar dev = x(i, j) - centers(i);
      acc += dev * dev;
    }
  }
  const auto n = static_cast<Scalar>(x.rows());
  return Scalar(d - k) / Scalar(k) * acc / (n * n);
}

/**
 * Variance of one ternary coordinate from its three outcomes (low, high and
 * the unbiasing value) and their probabilities.
 *
 * Note: the expression p_lo (x - lo)^2 + p_hi (x - hi)^2 + (p_lo lo + p_hi hi)^2
 * is not this variance. At x = 1, lo = 0, hi = 2, p_lo = p_hi = 1/4 it gives
 * 0.75 while the exact variance is 0.5.
 */
template <typename Scalar>
Scalar ternary_coordinate_variance(Scalar x, Scalar p_low, Scalar p_high, Scalar low, Scalar high) {
  const Scalar rest = Scalar(1) - p_low - p_high;
  const Scalar third = (x - p_low * low - p_high * high) / rest;
  const Scalar mean = p_low * low + p_high * high + rest * third;
  return p_low * (low - mean) * (low - mean) + p_high * (high - mean) * (high - mean) +
         rest * (third - mean) * (third - mean);
}

/// (1/n^2) * sum_ij Var(Y_i(j)) for the ternary encoder.
template <typename DX>
typename DX::Scalar mse_closed_ternary(const Eigen::MatrixBase<DX>& x, const TernaryParams& params) {
  using Scalar = typename DX::Scalar;
  params.validate(x.rows(), x.cols());
  Scalar acc(0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      acc += ternary_coordinate_variance<Scalar>(x(i, j), params.p_low(i, j), params.p_high(i, j), params.low(i),
                                                 params.high(i));
    }
  }
  const auto n = static_cast<Scalar>(x.rows());
  return acc / (n * n);
}

/// Deviation statistics of a dataset around its node centers.
struct SpreadStats {
  double R = 0.0;                // (1/n) sum_i ||X_i - mu_i 1||^2
  double W = 0.0;                // sum_ij a_ij
  Matrix a;                      // a_ij = |X_i(j) - mu_i|
  std::size_t support_size = 0;  // |S|, entries with a_ij > 0
  double max_a = 0.0;

  Eigen::Index n() const noexcept { return a.rows(); }
};

template <typename DX, typename DC>
SpreadStats spread_stats(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DC>& centers) {
  if (centers.size() != x.rows()) throw std::invalid_argument("spread_stats: shape mismatch");
  SpreadStats s;
  s.a = (x.derived().template cast<double>().colwise() - centers.derived().template cast<double>()).cwiseAbs();
  double sq = 0.0;
  for (Eigen::Index i = 0; i < s.a.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.a.cols(); ++j) {
      const double v = s.a(i, j);
      if (v == 0.0) continue;
      ++s.support_size;
      s.W += v;
      sq += v * v;
      s.max_a = std::max(s.max_a, v);
    }
  }
  s.R = sq / static_cast<double>(x.rows());
  return s;
}

struct MseBounds {
  double lower = 0.0;
  double upper = 0.0;
  /// Optimal MSE when no probability is clamped at 1 (B <= W / max a).
  std::optional<double> exact;
};

/// Bounds on the optimal MSE for budget 0 < B <= |S|; throws std::out_of_range otherwise.
MseBounds mse_bounds(const SpreadStats& stats, double budget, Eigen::Index n);

struct MseReport {
  double closed_form = 0.0;
  double empirical = 0.0;
  std::size_t trials = 0;
  double std_error = 0.0;

  static std::string csv_header() { return "closed_form,empirical,trials,std_error"; }
  std::string csv_row() const;
};

/**
 * Closed-form MSE of a pipeline on `data`. Under rotation it is evaluated on
 * the rotated rows; that is exact for power-of-two d and an upper bound when
 * padding is dropped by the decoder.
 */
double closed_form_mse(const Dataset& data, const Pipeline& pipeline);

/**
 * Monte Carlo MSE: `trials` independent encode/average/decode rounds.
 * Trial t uses seed derive_seed(seed, t) and node i within it
 * derive_seed(trial_seed, i). Deterministic for a fixed seed.
 */
MseReport mse_empirical(const Dataset& data, const Pipeline& pipeline, std::size_t trials, std::uint64_t seed);

}  // namespace dme
