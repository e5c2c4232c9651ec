#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace dme::test {

/**
 * Brute-force minimum of sum_s a_s^2 (1/p_s - 1) over 0 < p_s <= 1 with
 * sum p_s = budget, by grid search. The last coordinate is fixed by the
 * budget; the others are searched on a grid of step `start_step`, then on
 * successively 10x finer grids of +-10 steps around the best point until the
 * step drops below `min_step`. Only strictly positive `a` should be passed.
 * Returns the raw sum; callers divide by n^2.
 */
inline double grid_min_objective(const std::vector<double>& a, double budget, double start_step = 2e-2,
                                 double min_step = 1e-8) {
  const std::size_t s = a.size();
  if (s == 0) return 0.0;
  budget = std::min(budget, static_cast<double>(s));
  const auto objective = [&](const std::vector<double>& p) {
    double acc = 0.0;
    for (std::size_t k = 0; k < s; ++k) acc += a[k] * a[k] * (1.0 / p[k] - 1.0);
    return acc;
  };
  if (s == 1) return objective({budget});

  const std::size_t free = s - 1;
  std::vector<double> best(s, 0.0);
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<double> p(s);

  // Enumerate the free coordinates over axis grids; evaluate feasible points.
  const auto sweep = [&](const std::vector<std::vector<double>>& axes) {
    std::vector<std::size_t> idx(free, 0);
    while (true) {
      double sum = 0.0;
      for (std::size_t k = 0; k < free; ++k) sum += (p[k] = axes[k][idx[k]]);
      const double last = budget - sum;
      if (last > 0.0 && last <= 1.0) {
        p[free] = last;
        const double v = objective(p);
        if (v < best_val) best_val = v, best = p;
      }
      std::size_t k = 0;
      while (k < free && ++idx[k] == axes[k].size()) idx[k++] = 0;
      if (k == free) break;
    }
  };

  std::vector<std::vector<double>> axes(free);
  for (auto& axis : axes) {
    for (double v = start_step; v <= 1.0 + 1e-12; v += start_step) axis.push_back(std::min(v, 1.0));
  }
  sweep(axes);
  for (double h = start_step / 10.0; h >= min_step; h /= 10.0) {
    const std::vector<double> center = best;
    for (std::size_t k = 0; k < free; ++k) {
      axes[k].clear();
      for (int off = -10; off <= 10; ++off) {
        const double v = center[k] + off * h;
        if (v > 0.0 && v <= 1.0) axes[k].push_back(v);
      }
    }
    sweep(axes);
  }
  return best_val;
}

/// Golden-section minimum of a unimodal f on [lo, hi].
inline double golden_section_argmin(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - g * (hi - lo);
  double d = lo + g * (hi - lo);
  for (int it = 0; it < iters; ++it) {
    if (f(c) < f(d)) {
      hi = d;
    } else {
      lo = c;
    }
    c = hi - g * (hi - lo);
    d = lo + g * (hi - lo);
  }
  return (lo + hi) / 2.0;
}

}  // namespace dme::test
