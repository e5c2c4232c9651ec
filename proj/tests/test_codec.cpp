#include "doctest.h"

#include "dme/codec.hpp"
#include "dme/pipeline.hpp"
#include "test_support.hpp"

#include <array>

using namespace dme;
using test::Moments;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

/// Seed whose k-subset of {0..d-1} is exactly `want` (search over small seeds).
std::uint64_t seed_for_subset(std::size_t d, const std::vector<std::size_t>& want) {
  for (std::uint64_t s = 0; s < 100000; ++s) {
    if (sample_subset(s, d, want.size()) == want) return s;
  }
  FAIL("no seed found");
  return 0;
}

}  // namespace

TEST_CASE("encode_variable degenerate cases") {
  Rng rng(1);
  const Vector x = vec({1.5, -2.0, 0.25});
  SUBCASE("p = 1 is lossless") {
    for (int t = 0; t < 100; ++t) CHECK(encode_variable(0, x, Vector::Ones(3), 0.3, rng).dense() == x);
  }
  SUBCASE("x equal to the center gives the center and no entries") {
    const Vector c = Vector::Constant(3, 0.7);
    for (int t = 0; t < 100; ++t) {
      const auto y = encode_variable(0, c, Vector::Constant(3, 0.4), 0.7, rng);
      CHECK(y.entries.empty());
      CHECK(y.dense() == c);
    }
  }
  SUBCASE("zero probability only where x equals the center") {
    CHECK_NOTHROW(encode_variable(0, vec({1.0, 2.0}), vec({0.0, 0.5}), 1.0, rng));
    CHECK_THROWS_AS(encode_variable(0, vec({1.0, 2.0}), vec({0.5, 0.0}), 1.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(encode_variable(0, vec({1.0}), vec({1.5}), 1.0, rng), std::invalid_argument);
  }
}

TEST_CASE("encode_variable is unbiased and follows the support law") {
  // x = (0, 2), mu = 1, p = 1/2.
  const Vector x = vec({0.0, 2.0});
  const Vector p = vec({0.5, 0.5});
  Rng rng(77);
  const int draws = 100000;
  std::array<Moments, 2> m;
  std::array<std::size_t, 2> listed{};
  for (int t = 0; t < draws; ++t) {
    const auto y = encode_variable(0, x, p, 1.0, rng);
    y.validate();
    const Vector dense = y.dense();
    for (int j = 0; j < 2; ++j) m[j].add(dense(j));
    for (const auto& e : y.entries) ++listed[e.index];
  }
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(m[j].mean - x(j)) <= 4.0 * m[j].std_error());
    CHECK(test::binomial_close(listed[j], draws, 0.5, 3.0));
  }
}

TEST_CASE("encode_fixed") {
  SUBCASE("k = d reproduces x") {
    const Vector x = vec({1.0, -3.0, 2.5, 7.0});
    CHECK(encode_fixed(0, x, 4, 0.9, 5).dense() == x);
  }
  SUBCASE("substitution example") {
    const Vector x = vec({1.0, 2.0, 3.0, 4.0});
    const auto y = encode_fixed(0, x, 2, 2.5, seed_for_subset(4, {0, 2}));
    CHECK(y.dense() == vec({-0.5, 2.5, 3.5, 2.5}));
    REQUIRE(y.support);
    CHECK(y.support->k == 2);
  }
  SUBCASE("support is always k, minus coincidences with the center") {
    const Vector x = vec({1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
    for (std::uint64_t s = 0; s < 200; ++s) {
      const auto y = encode_fixed(0, x, 3, 0.0, s);
      CHECK(y.entries.size() == 3);
      CHECK(y.support->indices(6).size() == 3);
    }
  }
  SUBCASE("exact expectation over all six subsets equals x") {
    const Vector x = vec({1.0, 2.0, 3.0, 4.0});
    Vector sum = Vector::Zero(4);
    int subsets = 0;
    for (std::size_t a = 0; a < 4; ++a) {
      for (std::size_t b = a + 1; b < 4; ++b) {
        sum += encode_fixed(0, x, 2, 2.5, seed_for_subset(4, {a, b})).dense();
        ++subsets;
      }
    }
    CHECK(subsets == 6);
    CHECK((sum / 6.0 - x).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("Monte Carlo unbiasedness over seeds") {
    const Vector x = vec({1.0, 2.0, 3.0, 4.0});
    std::array<Moments, 4> m;
    for (std::uint64_t s = 0; s < 100000; ++s) {
      const Vector y = encode_fixed(0, x, 2, 2.5, derive_seed(99, s)).dense();
      for (int j = 0; j < 4; ++j) m[j].add(y(j));
    }
    for (int j = 0; j < 4; ++j) CHECK(std::abs(m[j].mean - x(j)) <= 4.0 * m[j].std_error());
  }
  CHECK_THROWS_AS(encode_fixed(0, vec({1.0, 2.0}), 3, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(encode_fixed(0, vec({1.0, 2.0}), 0, 0.0, 1), std::invalid_argument);
}

TEST_CASE("encode_binary_quant") {
  Rng rng(3);
  SUBCASE("max entry always maps to max; constant vector is untouched") {
    const Vector x = vec({0.0, 1.0, 2.0});
    for (int t = 0; t < 200; ++t) {
      const Vector y = encode_binary_quant(0, x, rng).dense();
      CHECK(y(2) == 2.0);
      CHECK(y(0) == 0.0);
    }
    const Vector c = Vector::Constant(4, -1.25);
    const auto y = encode_binary_quant(0, c, rng);
    CHECK(y.entries.empty());
    CHECK(y.dense() == c);
  }
  SUBCASE("unbiased") {
    const Vector x = vec({0.0, 1.0, 2.0});
    std::array<Moments, 3> m;
    for (int t = 0; t < 100000; ++t) {
      const Vector y = encode_binary_quant(0, x, rng).dense();
      for (int j = 0; j < 3; ++j) m[j].add(y(j));
    }
    for (int j = 0; j < 3; ++j) {
      if (m[j].variance() == 0.0) {
        CHECK(m[j].mean == x(j));
      } else {
        CHECK(std::abs(m[j].mean - x(j)) <= 4.0 * m[j].std_error());
      }
    }
  }
  SUBCASE("same outcome law as the variable encoder at mu = min") {
    // Oracle: the two-point law of each coordinate, enumerated by hand.
    const Vector x = vec({-1.0, 0.5, 3.0});
    const double lo = -1.0, hi = 3.0;
    const Vector p = (x.array() - lo) / (hi - lo);
    // encode_variable with these parameters lands exactly on {lo, hi}.
    for (Eigen::Index j = 0; j < 3; ++j) {
      if (p(j) == 0.0) continue;
      const double y = x(j) / p(j) - (1.0 - p(j)) / p(j) * lo;
      CHECK(y == doctest::Approx(hi).epsilon(1e-15));
    }
    // Both encoders use one uniform per coordinate with the same threshold,
    // so the same seed gives the same outcome.
    for (std::uint64_t s = 0; s < 500; ++s) {
      Rng r1(s), r2(s);
      const Vector a = encode_binary_quant(0, x, r1).dense();
      const Vector b = encode_variable(0, x, p, lo, r2).dense();
      CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("encode_ternary") {
  Rng rng(8);
  SUBCASE("zero probabilities reproduce x") {
    const Vector x = vec({1.0, -2.0, 4.0});
    CHECK(encode_ternary(x, Vector::Zero(3), Vector::Zero(3), -1.0, 5.0, rng) == x);
  }
  SUBCASE("three-outcome instance") {
    // x = 1, low = 0, high = 2, p = 1/4 each: third value (1 - 0 - 1/2)/(1/2) = 1.
    // Enumeration: E[Y] = 1/4*0 + 1/4*2 + 1/2*1 = 1, E[(Y-1)^2] = 1/4 + 1/4 + 0 = 0.5.
    Moments m;
    Moments sq;
    for (int t = 0; t < 100000; ++t) {
      const double y = encode_ternary(vec({1.0}), vec({0.25}), vec({0.25}), 0.0, 2.0, rng)(0);
      CHECK((y == 0.0 || y == 2.0 || y == 1.0));
      m.add(y);
      sq.add((y - 1.0) * (y - 1.0));
    }
    CHECK(std::abs(m.mean - 1.0) <= 4.0 * m.std_error());
    CHECK(std::abs(sq.mean - 0.5) <= 4.0 * sq.std_error());
  }
  SUBCASE("p_low + p_high >= 1 rejected") {
    CHECK_THROWS_AS(encode_ternary(vec({1.0}), vec({0.5}), vec({0.5}), 0.0, 2.0, rng), std::invalid_argument);
  }
}

TEST_CASE("decode_average") {
  const Vector y1 = vec({0.0, 2.0});
  const Vector y2 = vec({2.0, 0.0});
  SUBCASE("n = 1 is the identity") {
    const std::vector<EncodedVector> one{EncodedVector::from_dense(0, 0.5, y1)};
    CHECK(decode_average(one, 2) == y1);
  }
  SUBCASE("hand average") {
    const std::vector<EncodedVector> two{EncodedVector::from_dense(0, 0.0, y1), EncodedVector::from_dense(1, 1.0, y2)};
    CHECK(decode_average(two, 2) == vec({1.0, 1.0}));
  }
  SUBCASE("p = 1 everywhere recovers the mean exactly") {
    const Dataset data = gen_synthetic(Distribution::Laplace, 5, 7, 4);
    Rng rng(0);
    std::vector<EncodedVector> enc;
    for (Eigen::Index i = 0; i < 5; ++i) {
      enc.push_back(encode_variable(static_cast<std::size_t>(i), data.row(i).transpose(), Vector::Ones(7), 0.1, rng));
    }
    CHECK(decode_average(enc, 7) == data.mean());
  }
  SUBCASE("summed in node order regardless of input order") {
    const Dataset data = gen_synthetic(Distribution::Gaussian, 6, 5, 9);
    std::vector<EncodedVector> enc;
    for (Eigen::Index i = 0; i < 6; ++i) enc.push_back(EncodedVector::from_dense(static_cast<std::size_t>(i), 0.0, data.row(i).transpose()));
    const Vector ref = decode_average(enc, 5);
    std::reverse(enc.begin(), enc.end());
    CHECK(decode_average(enc, 5) == ref);
  }
  SUBCASE("dimension mismatch") {
    const std::vector<EncodedVector> bad{EncodedVector::from_dense(0, 0.0, y1)};
    CHECK_THROWS_AS(decode_average(bad, 3), std::invalid_argument);
  }
}

TEST_CASE("MSE of the average is the scaled sum of node variances") {
  // Empirical MSE of the average equals (1/n^2) * sum of per-node variances.
  const Dataset data = gen_synthetic(Distribution::Gaussian, 3, 4, 12);
  const Matrix probs = Matrix::Constant(3, 4, 0.3);
  const Vector centers = data.row_means();
  double var_sum = 0.0;
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) {
      const double dev = data.values()(i, j) - centers(i);
      var_sum += (1.0 / 0.3 - 1.0) * dev * dev;  // exact two-outcome variance
    }
  const double predicted = var_sum / 9.0;
  Moments err;
  Rng rng(1234);
  const Vector truth = data.mean();
  for (int t = 0; t < 100000; ++t) {
    std::vector<EncodedVector> enc;
    for (Eigen::Index i = 0; i < 3; ++i) {
      enc.push_back(encode_variable(static_cast<std::size_t>(i), data.row(i).transpose(), probs.row(i).transpose(),
                                    centers(i), rng));
    }
    err.add((decode_average(enc, 4) - truth).squaredNorm());
  }
  CHECK(std::abs(err.mean - predicted) <= 4.0 * err.std_error());
}

TEST_CASE("randomized Hadamard rotation") {
  Rng rng(5);
  SUBCASE("inverse pair and norm preservation, d = 8") {
    Vector x(8);
    for (auto& v : x) v = rng.normal();
    const Vector z = rotate(x, 17);
    CHECK(z.size() == 8);
    CHECK((unrotate(z, 17, 8) - x).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(z.norm() - x.norm()) <= 1e-12 * x.norm());
  }
  SUBCASE("padding for non power of two") {
    Vector x(5);
    for (auto& v : x) v = rng.normal();
    const Vector z = rotate(x, 3);
    CHECK(z.size() == 8);
    CHECK((unrotate(z, 3, 5) - x).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("fwht against the dense Hadamard matrix") {
    // Sylvester construction as an independent oracle.
    Eigen::MatrixXd h(1, 1);
    h << 1.0;
    while (h.rows() < 16) {
      Eigen::MatrixXd next(2 * h.rows(), 2 * h.rows());
      next << h, h, h, -h;
      h = next;
    }
    Vector v(16);
    for (auto& e : v) e = rng.normal();
    Vector w = v;
    fwht(w);
    CHECK((w - h * v).cwiseAbs().maxCoeff() < 1e-12);
    Vector bad(3);
    CHECK_THROWS_AS(fwht(bad), std::invalid_argument);
  }
  SUBCASE("rotate, identity encoder, unrotate, average is exact to round-off") {
    const Dataset data = gen_synthetic(Distribution::Gaussian, 4, 16, 2);
    const Pipeline pipe{IdentityEncoder{}, 99};
    const Matrix z = encoder_input(pipe, data.values());
    std::vector<EncodedVector> enc;
    for (Eigen::Index i = 0; i < 4; ++i) enc.push_back(encode_node(pipe.encoder, static_cast<std::size_t>(i), z.row(i).transpose(), 0));
    const Vector y = finish_decode(pipe, decode_average(enc, 16), 16);
    CHECK((y - data.mean()).squaredNorm() <= 1e-20);
  }
}

TEST_CASE("EncodedVector invariants") {
  EncodedVector y{0, 4, 1.0, {{2, 3.0}, {1, 2.0}}, std::nullopt};
  CHECK_THROWS_AS(y.validate(), std::invalid_argument);
  y.entries = {{1, 1.0}};
  CHECK_THROWS_AS(y.validate(), std::invalid_argument);
  y.entries = {{4, 2.0}};
  CHECK_THROWS_AS(y.validate(), std::invalid_argument);
  y.entries = {{0, 2.0}, {3, -1.0}};
  CHECK_NOTHROW(y.validate());
  CHECK(y.dense() == vec({2.0, 1.0, 1.0, -1.0}));
}
