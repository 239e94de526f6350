#pragma once

// Derivative-free simplex minimisation (Nelder-Mead with standard coefficients
// and restarts around the incumbent).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace lsmix {

struct NelderMeadOptions {
  double initial_step = 0.5;      ///< edge length of the starting simplex
  std::size_t max_evals = 4000;   ///< per restart
  std::size_t restarts = 2;       ///< fresh simplices built around the incumbent
  double x_tol = 1e-14;           ///< stop when every vertex is this close to the best one (relative)
  double f_tol = 0.0;             ///< stop when f spread across the simplex is <= f_tol
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = 0.0;
  std::size_t evals = 0;
};

template <class Objective>
NelderMeadResult nelder_mead(Objective&& f, std::vector<double> x0, const NelderMeadOptions& opt = {}) {
  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;
  const std::size_t dim = x0.size();

  NelderMeadResult best{x0, f(x0), 1};
  std::vector<std::vector<double>> simplex(dim + 1, std::vector<double>(dim));
  std::vector<double> fx(dim + 1);
  std::vector<std::size_t> order(dim + 1);
  std::vector<double> centroid(dim), trial(dim), trial2(dim);

  for (std::size_t round = 0; round <= opt.restarts; ++round) {
    std::size_t evals = 0;
    simplex[0] = best.x;
    fx[0] = best.f;
    for (std::size_t k = 0; k < dim; ++k) {
      simplex[k + 1] = best.x;
      const double h = opt.initial_step * (round == 0 ? 1.0 : 0.1) * std::max(1.0, std::abs(best.x[k]));
      simplex[k + 1][k] += h;
      fx[k + 1] = f(simplex[k + 1]);
      ++evals;
    }

    while (evals < opt.max_evals) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
      const std::size_t lo = order.front();
      const std::size_t hi = order.back();
      const std::size_t second = order[dim - 1];

      if (fx[hi] - fx[lo] <= opt.f_tol) break;
      double spread = 0.0;
      for (std::size_t v = 0; v <= dim; ++v) {
        for (std::size_t k = 0; k < dim; ++k) {
          spread = std::max(spread, std::abs(simplex[v][k] - simplex[lo][k]) /
                                        (1.0 + std::abs(simplex[lo][k])));
        }
      }
      if (spread <= opt.x_tol) break;

      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (std::size_t v = 0; v <= dim; ++v) {
        if (v == hi) continue;
        for (std::size_t k = 0; k < dim; ++k) centroid[k] += simplex[v][k];
      }
      for (auto& c : centroid) c /= static_cast<double>(dim);

      for (std::size_t k = 0; k < dim; ++k) trial[k] = centroid[k] + kReflect * (centroid[k] - simplex[hi][k]);
      const double fr = f(trial);
      ++evals;

      if (fr < fx[lo]) {
        for (std::size_t k = 0; k < dim; ++k) trial2[k] = centroid[k] + kExpand * (trial[k] - centroid[k]);
        const double fe = f(trial2);
        ++evals;
        if (fe < fr) {
          simplex[hi] = trial2;
          fx[hi] = fe;
        } else {
          simplex[hi] = trial;
          fx[hi] = fr;
        }
      } else if (fr < fx[second]) {
        simplex[hi] = trial;
        fx[hi] = fr;
      } else {
        const bool outside = fr < fx[hi];
        const auto& toward = outside ? trial : simplex[hi];
        for (std::size_t k = 0; k < dim; ++k) trial2[k] = centroid[k] + kContract * (toward[k] - centroid[k]);
        const double fc = f(trial2);
        ++evals;
        if (fc < (outside ? fr : fx[hi])) {
          simplex[hi] = trial2;
          fx[hi] = fc;
        } else {
          for (std::size_t v = 0; v <= dim; ++v) {
            if (v == lo) continue;
            for (std::size_t k = 0; k < dim; ++k) {
              simplex[v][k] = simplex[lo][k] + kShrink * (simplex[v][k] - simplex[lo][k]);
            }
            fx[v] = f(simplex[v]);
            ++evals;
          }
        }
      }
    }

    best.evals += evals;
    const auto it = std::min_element(fx.begin(), fx.end());
    const auto idx = static_cast<std::size_t>(it - fx.begin());
    if (fx[idx] <= best.f) {
      best.f = fx[idx];
      best.x = simplex[idx];
    }
  }
  return best;
}

}  // namespace lsmix
