#pragma once

#include "dme/bits.hpp"
#include "dme/codec.hpp"
#include "dme/dataset.hpp"

#include <optional>
#include <vector>

namespace dme {

/**
 * Minimize sum_ij (1/p_ij - 1)(X_i(j) - mu_i)^2 subject to sum_ij p_ij <= budget.
 * Without fixed_centers the centers are free and found by alternating minimization.
 * With per_node_budgets each row gets its own budget (they must sum to `budget`).
 */
struct BudgetProblem {
  Dataset data;
  double budget = 0.0;
  std::optional<Vector> fixed_centers;
  std::optional<Vector> per_node_budgets;
};

struct Solution {
  EncoderParams params;
  double objective = 0.0;  // mse_closed_variable(data, params)
  int iterations = 0;
  bool converged = false;
  /// Objective after the initial probability step and after every half-step that follows.
  std::vector<double> trace;
};

/**
 * Exact minimizer of sum a_ij^2 / p_ij subject to sum p_ij = budget, 0 <= p <= 1.
 *
 * Water-filling: p_ij = min(1, a_ij / theta) with theta chosen so the
 * probabilities sum to the budget. Entries are sorted by a descending (ties by
 * row-major index) and the clamped prefix is found in one scan. Entries with
 * a_ij = 0 get p_ij = 0. When budget <= W / max a nothing clamps and
 * p_ij = a_ij * budget / W.
 *
 * Throws std::out_of_range unless 0 < budget <= |{a_ij > 0}|.
 */
Matrix optimal_probs_given_centers(const Matrix& a, double budget);

/**
 * Minimizing centers for fixed probabilities: weighted row means with
 * w_ij = 1/p_ij - 1. A row with all p = 1 falls back to the arithmetic mean
 * (the objective does not depend on its center). A zero probability pins the
 * center to that entry's value, since any other center makes the objective infinite.
 */
Vector optimal_centers_given_probs(const Matrix& x, const Matrix& probs);

/// Alternates center and probability steps from row-mean centers until the relative decrease drops below tol.
Solution alternating_minimize(const BudgetProblem& problem, double tol = 1e-9, int max_iters = 100);

/// Solves each row on its own budget and assembles the result.
Solution per_node_split(const BudgetProblem& problem, double tol = 1e-9, int max_iters = 100);

/// Sparse-indexed cost of a probability budget: n r_bar + (ceil(log2 d) + r) B.
double cost_from_budget(double budget, const BitSizes& sizes, std::size_t n, std::size_t d);
/// Inverse of cost_from_budget, floored at 0.
double budget_from_bits(double bits, const BitSizes& sizes, std::size_t n, std::size_t d);

}  // namespace dme
