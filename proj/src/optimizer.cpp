#include "dme/optimizer.hpp"

#include "dme/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace dme {

Matrix optimal_probs_given_centers(const Matrix& a, double budget) {
  if (!a.allFinite() || (a.array() < 0.0).any()) {
    throw std::invalid_argument("optimal_probs_given_centers: deviations must be finite and non-negative");
  }
  struct Item {
    double value;
    Eigen::Index flat;
  };
  std::vector<Item> active;
  for (Eigen::Index f = 0; f < a.size(); ++f) {
    const double v = a.data()[f];  // row-major, so flat order is (i, j) lexicographic
    if (v > 0.0) active.push_back({v, f});
  }
  const std::size_t support = active.size();
  if (!(budget > 0.0) || budget > static_cast<double>(support)) {
    throw std::out_of_range("optimal_probs_given_centers: budget must satisfy 0 < B <= |S|");
  }
  std::sort(active.begin(), active.end(), [](const Item& l, const Item& r) {
    return l.value != r.value ? l.value > r.value : l.flat < r.flat;
  });

  // tail[m] = sum of the values left unclamped when the m largest are clamped to 1.
  std::vector<double> tail(support + 1, 0.0);
  for (std::size_t m = support; m-- > 0;) tail[m] = tail[m + 1] + active[m].value;

  Matrix p = Matrix::Zero(a.rows(), a.cols());
  std::size_t clamped = support;
  double theta = 0.0;
  for (std::size_t m = 0; m < support; ++m) {
    const double left = budget - static_cast<double>(m);
    if (left <= 0.0) break;
    theta = tail[m] / left;
    if (active[m].value <= theta) {
      clamped = m;
      break;
    }
  }
  for (std::size_t m = 0; m < support; ++m) {
    p.data()[active[m].flat] = m < clamped ? 1.0 : std::min(1.0, active[m].value / theta);
  }
  return p;
}

Vector optimal_centers_given_probs(const Matrix& x, const Matrix& probs) {
  if (probs.rows() != x.rows() || probs.cols() != x.cols()) {
    throw std::invalid_argument("optimal_centers_given_probs: shape mismatch");
  }
  Vector centers(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::optional<double> pinned;
    double wsum = 0.0;
    double wx = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double p = probs(i, j);
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("optimal_centers_given_probs: probability outside [0, 1]");
      if (p == 0.0) {
        if (pinned && *pinned != x(i, j)) {
          throw std::invalid_argument("optimal_centers_given_probs: zero probabilities on unequal entries of one row");
        }
        pinned = x(i, j);
        continue;
      }
      const double w = 1.0 / p - 1.0;
      wsum += w;
      wx += w * x(i, j);
    }
    if (pinned) {
      centers(i) = *pinned;
    } else if (wsum == 0.0) {
      centers(i) = x.row(i).mean();
    } else {
      centers(i) = wx / wsum;
    }
  }
  return centers;
}

namespace {

Matrix deviations(const Matrix& x, const Vector& centers) { return (x.colwise() - centers).cwiseAbs(); }

/// Water-filling with the budget clipped to the support; an empty support gets all-zero probabilities.
Matrix probability_step(const Matrix& x, const Vector& centers, double budget) {
  const Matrix a = deviations(x, centers);
  const auto support = static_cast<double>((a.array() > 0.0).count());
  if (support == 0.0) return Matrix::Zero(x.rows(), x.cols());
  return optimal_probs_given_centers(a, std::min(budget, support));
}

Solution solve_pooled(const Matrix& x, double budget, const std::optional<Vector>& fixed_centers, double tol,
                      int max_iters) {
  if (!(budget > 0.0)) throw std::out_of_range("budget must be positive");
  if (!(tol > 0.0) || max_iters < 1) throw std::invalid_argument("alternating_minimize: need tol > 0 and max_iters >= 1");

  Vector centers = fixed_centers ? *fixed_centers : Vector(x.rowwise().mean());
  if (centers.size() != x.rows()) throw std::invalid_argument("alternating_minimize: need one center per node");

  Solution sol;
  sol.params.centers = centers;
  sol.params.probs = probability_step(x, centers, budget);
  sol.objective = mse_closed_variable(x, sol.params.probs, sol.params.centers);
  sol.trace.push_back(sol.objective);
  sol.iterations = 1;
  if (fixed_centers) {
    sol.converged = true;
    return sol;
  }

  for (int it = 1; it <= max_iters; ++it) {
    // Each half-step is exact, so a higher value can only be rounding; such a step is rejected.
    const double before = sol.objective;
    Vector next_centers = optimal_centers_given_probs(x, sol.params.probs);
    double value = mse_closed_variable(x, sol.params.probs, next_centers);
    if (value <= sol.objective) {
      sol.params.centers = std::move(next_centers);
      sol.objective = value;
    }
    sol.trace.push_back(sol.objective);
    Matrix next_probs = probability_step(x, sol.params.centers, budget);
    value = mse_closed_variable(x, next_probs, sol.params.centers);
    if (value <= sol.objective) {
      sol.params.probs = std::move(next_probs);
      sol.objective = value;
    }
    sol.trace.push_back(sol.objective);
    sol.iterations = it;
    if (before <= 0.0 || (before - sol.objective) / before < tol) {
      sol.converged = true;
      break;
    }
  }
  return sol;
}

}  // namespace

Solution alternating_minimize(const BudgetProblem& problem, double tol, int max_iters) {
  const Matrix& x = problem.data.values();
  if (problem.budget > static_cast<double>(x.size())) throw std::out_of_range("budget exceeds n*d");
  return solve_pooled(x, problem.budget, problem.fixed_centers, tol, max_iters);
}

Solution per_node_split(const BudgetProblem& problem, double tol, int max_iters) {
  if (!problem.per_node_budgets) throw std::invalid_argument("per_node_split: per-node budgets not set");
  const Matrix& x = problem.data.values();
  const Vector& budgets = *problem.per_node_budgets;
  if (budgets.size() != x.rows()) throw std::invalid_argument("per_node_split: need one budget per node");
  if (std::abs(budgets.sum() - problem.budget) > 1e-9 * std::max(1.0, problem.budget)) {
    throw std::invalid_argument("per_node_split: per-node budgets must sum to the total budget");
  }

  Solution out;
  out.params.probs = Matrix::Zero(x.rows(), x.cols());
  out.params.centers = Vector::Zero(x.rows());
  out.converged = true;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Matrix row = x.row(i);
    std::optional<Vector> center;
    if (problem.fixed_centers) center = Vector::Constant(1, (*problem.fixed_centers)(i));
    const double row_center = center ? (*center)(0) : row.mean();
    const auto support = static_cast<double>(((row.array() - row_center).abs() > 0.0).count());
    if (!(budgets(i) > 0.0) || budgets(i) > support) {
      throw std::out_of_range("per_node_split: node budget must satisfy 0 < B_i <= |S_i|");
    }
    const Solution part = solve_pooled(row, budgets(i), center, tol, max_iters);
    out.params.probs.row(i) = part.params.probs.row(0);
    out.params.centers(i) = part.params.centers(0);
    out.iterations = std::max(out.iterations, part.iterations);
    out.converged = out.converged && part.converged;
  }
  out.objective = mse_closed_variable(x, out.params.probs, out.params.centers);
  out.trace.push_back(out.objective);
  return out;
}

double cost_from_budget(double budget, const BitSizes& sizes, std::size_t n, std::size_t d) {
  return static_cast<double>(n) * sizes.r_bar + (ceil_log2(d) + static_cast<double>(sizes.r)) * budget;
}

double budget_from_bits(double bits, const BitSizes& sizes, std::size_t n, std::size_t d) {
  const double b = (bits - static_cast<double>(n) * sizes.r_bar) / (ceil_log2(d) + static_cast<double>(sizes.r));
  return std::max(0.0, b);
}

}  // namespace dme
