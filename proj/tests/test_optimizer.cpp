#include "doctest.h"

#include "dme/analysis.hpp"
#include "dme/optimizer.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace dme;

namespace {

Matrix mat(Eigen::Index rows, Eigen::Index cols, std::initializer_list<double> xs) {
  Matrix m(rows, cols);
  Eigen::Index k = 0;
  for (double x : xs) m(k / cols, k % cols) = x, ++k;
  return m;
}

Matrix random_deviations(Rng& rng, Eigen::Index n, Eigen::Index d) {
  Matrix a(n, d);
  for (auto& v : a.reshaped()) v = rng.below(5) == 0 ? 0.0 : std::abs(rng.normal()) * (1.0 + 4.0 * rng.uniform());
  return a;
}

/// sum a^2 (1/p - 1) / n^2 over a > 0.
double objective(const Matrix& a, const Matrix& p) {
  return mse_closed_variable(a, p, Vector::Zero(a.rows()));
}

}  // namespace

TEST_CASE("water-filling, worked examples") {
  SUBCASE("uniform deviations spread the budget evenly") {
    const Matrix p = optimal_probs_given_centers(Matrix::Constant(3, 4, 2.0), 5.0);
    CHECK((p.array() - 5.0 / 12.0).abs().maxCoeff() < 1e-15);
  }
  SUBCASE("no clamping") {
    const Matrix a = mat(1, 2, {3.0, 1.0});
    const Matrix p = optimal_probs_given_centers(a, 1.0);
    CHECK(p(0, 0) == 0.75);
    CHECK(p(0, 1) == 0.25);
    CHECK(objective(a, p) == doctest::Approx(6.0).epsilon(1e-14));
  }
  SUBCASE("clamping active") {
    const Matrix a = mat(1, 2, {3.0, 1.0});
    const Matrix p = optimal_probs_given_centers(a, 1.8);
    CHECK(p(0, 0) == 1.0);
    CHECK(p(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(objective(a, p) == doctest::Approx(0.25).epsilon(1e-14));
    // Oracle: grid over p2 in (0, 1] with p1 = B - p2 feasible.
    double best = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 100000; ++k) {
      const double p2 = k * 1e-5;
      const double p1 = 1.8 - p2;
      if (p1 > 1.0 || p1 <= 0.0) continue;
      best = std::min(best, 9.0 * (1.0 / p1 - 1.0) + (1.0 / p2 - 1.0));
    }
    CHECK(objective(a, p) <= best + 1e-12);
    CHECK(best - objective(a, p) < 1e-6);
  }
  SUBCASE("zero deviations get zero probability") {
    const Matrix p = optimal_probs_given_centers(mat(1, 3, {0.0, 2.0, 1.0}), 1.0);
    CHECK(p(0, 0) == 0.0);
    CHECK(p.sum() == doctest::Approx(1.0));
  }
  SUBCASE("budget out of range") {
    const Matrix a = mat(1, 3, {0.0, 2.0, 1.0});
    CHECK_THROWS_AS(optimal_probs_given_centers(a, 0.0), std::out_of_range);
    CHECK_THROWS_AS(optimal_probs_given_centers(a, 2.5), std::out_of_range);
    CHECK_NOTHROW(optimal_probs_given_centers(a, 2.0));
    CHECK(optimal_probs_given_centers(a, 2.0) == mat(1, 3, {0.0, 1.0, 1.0}));
  }
}

TEST_CASE("water-filling satisfies the KKT conditions, property") {
  Rng rng(3);
  for (int t = 0; t < 300; ++t) {
    const Matrix a = random_deviations(rng, 1 + static_cast<Eigen::Index>(rng.below(6)),
                                       1 + static_cast<Eigen::Index>(rng.below(12)));
    const auto support = static_cast<double>((a.array() > 0.0).count());
    if (support == 0.0) continue;
    const double B = support * (0.01 + 0.99 * rng.uniform());
    const Matrix p = optimal_probs_given_centers(a, B);
    CHECK(std::abs(p.sum() - B) <= 1e-12 * B);
    CHECK((p.array() >= 0.0).all());
    CHECK((p.array() <= 1.0).all());

    double theta = -1.0;
    double min_clamped = std::numeric_limits<double>::infinity();
    for (Eigen::Index f = 0; f < a.size(); ++f) {
      const double av = a.data()[f];
      const double pv = p.data()[f];
      if (av == 0.0) {
        CHECK(pv == 0.0);
      } else if (pv < 1.0) {
        const double ratio = av / pv;
        if (theta < 0.0) theta = ratio;
        CHECK(test::rel_close(ratio, theta, 1e-12));
      } else {
        min_clamped = std::min(min_clamped, av);
      }
    }
    if (theta > 0.0 && std::isfinite(min_clamped)) CHECK(min_clamped >= theta * (1.0 - 1e-12));
  }
}

TEST_CASE("water-filling matches brute force on all small 2x2 instances") {
  int instances = 0;
  for (int code = 0; code < 256; ++code) {
    Matrix a(2, 2);
    for (int k = 0; k < 4; ++k) a.data()[k] = static_cast<double>((code >> (2 * k)) & 3);
    std::vector<double> active;
    for (int k = 0; k < 4; ++k)
      if (a.data()[k] > 0.0) active.push_back(a.data()[k]);
    if (active.empty()) continue;
    for (double B : {0.5, 1.0, 1.5, 2.0}) {
      CAPTURE(code);
      CAPTURE(B);
      const double clipped = std::min(B, static_cast<double>(active.size()));
      const double wf = objective(a, optimal_probs_given_centers(a, clipped));
      const double brute = test::grid_min_objective(active, clipped) / 4.0;
      CHECK(wf <= brute + 1e-12);
      CHECK(std::abs(wf - brute) <= 1e-6);
      ++instances;
    }
  }
  CHECK(instances == 255 * 4);
}

TEST_CASE("scaling the data leaves probabilities unchanged and scales MSE by c^2") {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const Matrix a = random_deviations(rng, 4, 9);
    const auto support = static_cast<double>((a.array() > 0.0).count());
    if (support == 0.0) continue;
    const double B = support * (0.05 + 0.9 * rng.uniform());
    const double c = 0.1 + 10.0 * rng.uniform();
    const Matrix p = optimal_probs_given_centers(a, B);
    const Matrix pc = optimal_probs_given_centers(c * a, B);
    CHECK((p - pc).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(test::rel_close(objective(c * a, pc), c * c * objective(a, p), 1e-11));
  }
}

TEST_CASE("optimal centers") {
  const Matrix x = mat(1, 2, {0.0, 3.0});
  const Matrix p = mat(1, 2, {0.5, 1.0 / 3.0});
  const double mu = optimal_centers_given_probs(x, p)(0);
  CHECK(mu == doctest::Approx(2.0).epsilon(1e-15));
  const auto row_objective = [&](double m) {
    return (1.0 / 0.5 - 1.0) * (0.0 - m) * (0.0 - m) + (3.0 - 1.0) * (3.0 - m) * (3.0 - m);
  };
  CHECK(test::golden_section_argmin(row_objective, -10.0, 10.0) == doctest::Approx(mu).epsilon(1e-8));

  const Matrix y = mat(2, 3, {1.0, 2.0, 6.0, -1.0, 0.0, 4.0});
  const Vector uniform = optimal_centers_given_probs(y, Matrix::Constant(2, 3, 0.4));
  CHECK(uniform(0) == doctest::Approx(3.0));
  CHECK(uniform(1) == doctest::Approx(1.0));
  const Vector ones = optimal_centers_given_probs(y, Matrix::Ones(2, 3));
  CHECK(ones(0) == 3.0);
  CHECK(ones(1) == 1.0);
  CHECK(mse_closed_variable(y, Matrix::Ones(2, 3), Vector::Constant(2, 17.0)) == 0.0);

  SUBCASE("a zero probability pins the center") {
    CHECK(optimal_centers_given_probs(y, mat(2, 3, {0.5, 0.0, 0.5, 0.5, 0.5, 0.5}))(0) == 2.0);
    CHECK_THROWS_AS(optimal_centers_given_probs(y, mat(2, 3, {0.0, 0.0, 0.5, 0.5, 0.5, 0.5})), std::invalid_argument);
  }
}

TEST_CASE("alternating minimization") {
  SUBCASE("fixed centers take a single probability step") {
    const Dataset data = gen_synthetic(Distribution::Laplace, 4, 16, 1);
    const Vector mu = data.row_means();
    const Solution sol = alternating_minimize({data, 10.0, mu, std::nullopt});
    CHECK(sol.iterations == 1);
    CHECK(sol.params.centers == mu);
    CHECK(sol.params.probs == optimal_probs_given_centers((data.values().colwise() - mu).cwiseAbs(), 10.0));
  }

  SUBCASE("monotone descent, feasibility and sandwich on random problems") {
    Rng rng(5);
    for (int t = 0; t < 50; ++t) {
      const auto n = static_cast<Eigen::Index>(1 + rng.below(8));
      const auto d = static_cast<Eigen::Index>(2 + rng.below(30));
      const Distribution dist = std::array{Distribution::Gaussian, Distribution::Laplace,
                                           Distribution::ChiSquared2}[rng.below(3)];
      const Dataset data = gen_synthetic(dist, static_cast<std::size_t>(n), static_cast<std::size_t>(d), rng.next());
      const double B = static_cast<double>(n * d) * (0.02 + 0.5 * rng.uniform());
      const Solution sol = alternating_minimize({data, B, std::nullopt, std::nullopt});
      for (std::size_t k = 1; k < sol.trace.size(); ++k) CHECK(sol.trace[k] <= sol.trace[k - 1]);
      CHECK(sol.params.probs.sum() <= B * (1.0 + 1e-9));
      CHECK((sol.params.probs.array() >= 0.0).all());
      CHECK((sol.params.probs.array() <= 1.0).all());
      CHECK(sol.objective == mse_closed_variable(data.values(), sol.params.probs, sol.params.centers));
      const SpreadStats s = spread_stats(data.values(), sol.params.centers);
      const MseBounds bounds = mse_bounds(s, std::min(B, static_cast<double>(s.support_size)), n);
      CHECK(sol.objective >= bounds.lower * (1.0 - 1e-12));
      CHECK(sol.objective <= bounds.upper * (1.0 + 1e-12) + 1e-15);
      if (bounds.exact && B <= static_cast<double>(s.support_size)) {
        CHECK(test::rel_close(sol.objective, *bounds.exact, 1e-10));
      }
    }
  }

  SUBCASE("symmetric data: row-mean centers are nearly optimal in objective") {
    const Dataset data = gen_synthetic(Distribution::Gaussian, 16, 512, 2);
    const double B = 16.0 * 512 / 16;
    const Solution fixed = alternating_minimize({data, B, data.row_means(), std::nullopt});
    const Solution free = alternating_minimize({data, B, std::nullopt, std::nullopt}, 1e-9, 1000);
    CHECK(free.converged);
    CHECK(free.objective <= fixed.objective);
    CHECK(fixed.objective - free.objective <= 0.01 * fixed.objective);
  }

  SUBCASE("skewed data: free centers beat row-mean centers") {
    const Dataset data = gen_synthetic(Distribution::ChiSquared2, 16, 512, 3);
    const double B = 16.0 * 512 / 16;
    const Solution fixed = alternating_minimize({data, B, data.row_means(), std::nullopt});
    const Solution free = alternating_minimize({data, B, std::nullopt, std::nullopt});
    CHECK(free.objective < fixed.objective);
    CHECK(free.trace.front() == fixed.objective);
  }

  CHECK_THROWS_AS(alternating_minimize({gen_synthetic(Distribution::Gaussian, 2, 2, 1), 5.0, std::nullopt, std::nullopt}),
                  std::out_of_range);
}

TEST_CASE("per-node split") {
  SUBCASE("single node matches the pooled solution") {
    const Dataset data = gen_synthetic(Distribution::Laplace, 1, 20, 4);
    const Solution pooled = alternating_minimize({data, 5.0, std::nullopt, std::nullopt});
    const Solution split = per_node_split({data, 5.0, std::nullopt, Vector::Constant(1, 5.0)});
    CHECK(split.objective == doctest::Approx(pooled.objective).epsilon(1e-12));
  }
  SUBCASE("equal rows with equal budgets match the pooled solution") {
    const Dataset one = gen_synthetic(Distribution::Gaussian, 1, 10, 5);
    Matrix both(2, 10);
    both << one.values(), one.values();
    const Dataset data{both};
    const Solution pooled = alternating_minimize({data, 6.0, data.row_means(), std::nullopt});
    const Solution split = per_node_split({data, 6.0, data.row_means(), Vector::Constant(2, 3.0)});
    CHECK((pooled.params.probs - split.params.probs).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(split.objective == doctest::Approx(pooled.objective).epsilon(1e-12));
  }
  SUBCASE("pooled budget is never worse") {
    const Dataset data{mat(2, 2, {3.0, 1.0, 1.0, 1.0})};
    const Vector zero = Vector::Zero(2);
    const Solution pooled = alternating_minimize({data, 2.0, zero, std::nullopt});
    const Solution split = per_node_split({data, 2.0, zero, Vector::Constant(2, 1.0)});
    CHECK(pooled.objective <= split.objective);
    CHECK(split.objective == doctest::Approx((6.0 + 2.0) / 4.0));

    Rng rng(6);
    for (int t = 0; t < 30; ++t) {
      const Dataset d = gen_synthetic(Distribution::ChiSquared2, 4, 12, rng.next());
      const Vector shares = Vector::Constant(4, 2.0);
      const Solution p = alternating_minimize({d, 8.0, d.row_means(), std::nullopt});
      const Solution s = per_node_split({d, 8.0, d.row_means(), shares});
      CHECK(p.objective <= s.objective * (1.0 + 1e-12));
    }
  }
  SUBCASE("budget validation") {
    const Dataset data{mat(2, 2, {3.0, 1.0, 1.0, 1.0})};
    const Vector zero = Vector::Zero(2);
    CHECK_THROWS_AS(per_node_split({data, 2.0, zero, Vector::Constant(2, 0.5)}), std::invalid_argument);
    CHECK_THROWS_AS(per_node_split({data, 3.0, zero, (Vector(2) << 0.0, 3.0).finished()}), std::out_of_range);
    CHECK_THROWS_AS(per_node_split({data, 2.0, zero, std::nullopt}), std::invalid_argument);
  }
}

TEST_CASE("bit budget conversion") {
  const BitSizes sz{16, 16, 64};
  CHECK(cost_from_budget(512.0, sz, 16, 512) == 16.0 * 16 + 25.0 * 512);
  CHECK(budget_from_bits(cost_from_budget(37.5, sz, 16, 512), sz, 16, 512) == 37.5);
  CHECK(budget_from_bits(100.0, sz, 16, 512) == 0.0);
}

TEST_CASE("gaussian centers stay within 2% RMS of row means") {
  // Relative to the RMS deviation of the data from its row means.
  const Dataset data = gen_synthetic(Distribution::Gaussian, 16, 512, 2);
  const Solution sol = alternating_minimize({data, 16.0 * 512 / 16, std::nullopt, std::nullopt}, 1e-9, 1000);
  REQUIRE(sol.converged);
  const Vector diff = sol.params.centers - data.row_means();
  const double rms_shift = std::sqrt(diff.squaredNorm() / 16.0);
  const Matrix dev = data.values().colwise() - data.row_means();
  const double rms_scale = std::sqrt(dev.squaredNorm() / static_cast<double>(dev.size()));
  CHECK(rms_shift <= 0.02 * rms_scale);
}
