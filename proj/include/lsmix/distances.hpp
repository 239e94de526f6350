#pragma once

// Hellinger and total-variation distances between mixture densities, and the
// two-point construction used by the minimax lower bounds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lsmix/errors.hpp"
#include "lsmix/model.hpp"
#include "lsmix/parallel.hpp"
#include "lsmix/polysys.hpp"
#include "lsmix/quadrature.hpp"

namespace lsmix {

struct IntegrationWindow {
  double lo;
  double hi;
};

/// Smallest interval covering mean +- sigmas * sd for every listed component.
inline IntegrationWindow covering_window(std::initializer_list<std::pair<double, double>> mean_var,
                                         double sigmas) {
  IntegrationWindow w{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& [mean, var] : mean_var) {
    const double half = sigmas * std::sqrt(var);
    w.lo = std::min(w.lo, mean - half);
    w.hi = std::max(w.hi, mean + half);
  }
  return w;
}

inline IntegrationWindow mixture_window(const MixtureParams& a, const MixtureParams& b,
                                        const MixingConfig& mix, double sigmas) {
  return covering_window({{a.mean_first(mix), a.v1},
                          {a.mean_second(mix), a.v2},
                          {b.mean_first(mix), b.v1},
                          {b.mean_second(mix), b.v2}},
                         sigmas);
}

/// h^2(p, q) = (1/2) int (sqrt p - sqrt q)^2 over the window, for arbitrary densities.
template <class P, class Q>
double hellinger_sq_densities(P&& p, Q&& q, IntegrationWindow window, const QuadratureSpec& quad) {
  quad.validate();
  auto integrand = [&](double x) {
    const double px = p(x), qx = q(x);
    const double root_sum = std::sqrt(px) + std::sqrt(qx);
    if (root_sum == 0.0) return 0.0;
    const double d = (px - qx) / root_sum;
    return 0.5 * d * d;
  };
  return adaptive_simpson(integrand, window.lo, window.hi, quad.abs_tol, quad.max_subdivisions);
}

/// V(p, q) = (1/2) int |p - q| over the window.
template <class P, class Q>
double total_variation_densities(P&& p, Q&& q, IntegrationWindow window, const QuadratureSpec& quad) {
  quad.validate();
  auto integrand = [&](double x) { return 0.5 * std::abs(p(x) - q(x)); };
  return adaptive_simpson(integrand, window.lo, window.hi, quad.abs_tol, quad.max_subdivisions);
}

inline double hellinger_sq(const MixtureParams& a, const MixtureParams& b, const MixingConfig& mix,
                           const QuadratureSpec& quad = {}) {
  a.validate();
  b.validate();
  return hellinger_sq_densities([&](double x) { return mixture_pdf(x, a, mix); },
                                [&](double x) { return mixture_pdf(x, b, mix); },
                                mixture_window(a, b, mix, quad.window_sigmas), quad);
}

inline double total_variation(const MixtureParams& a, const MixtureParams& b, const MixingConfig& mix,
                              const QuadratureSpec& quad = {}) {
  a.validate();
  b.validate();
  return total_variation_densities([&](double x) { return mixture_pdf(x, a, mix); },
                                   [&](double x) { return mixture_pdf(x, b, mix); },
                                   mixture_window(a, b, mix, quad.window_sigmas), quad);
}

/// Integral of g(.; eta) over the same window a distance call would use.
inline double mixture_mass(const MixtureParams& a, const MixingConfig& mix, const QuadratureSpec& quad = {}) {
  a.validate();
  quad.validate();
  return adaptive_simpson([&](double x) { return mixture_pdf(x, a, mix); },
                          mixture_window(a, a, mix, quad.window_sigmas).lo,
                          mixture_window(a, a, mix, quad.window_sigmas).hi, quad.abs_tol,
                          quad.max_subdivisions);
}

/// Two parameter points built from a polynomial-system solution s at scale eps:
///   eta1 = (eps (x2 - x1), v0 + eps^2 y1, v0 + eps^2 (y2 + y3))
///   eta2 = (eps x2,        v0,            v0 + eps^2 y3)
struct MinimaxPair {
  MixtureParams eta1;
  MixtureParams eta2;
  double epsilon = 0.0;
  PolyCandidate solution;
  double v0 = 1.0;
};

inline MinimaxPair minimax_pair(const PolyCandidate& s, double epsilon, double v0) {
  if (!(epsilon > 0.0)) throw DomainError("minimax pair needs epsilon > 0");
  if (!(v0 > 0.0)) throw DomainError("minimax pair needs v0 > 0");
  const double e2 = epsilon * epsilon;
  MinimaxPair pair;
  pair.epsilon = epsilon;
  pair.solution = s;
  pair.v0 = v0;
  pair.eta1 = {epsilon * (s.x2 - s.x1), v0 + e2 * s.y1, v0 + e2 * (s.y2 + s.y3)};
  pair.eta2 = {epsilon * s.x2, v0, v0 + e2 * s.y3};
  if (!pair.eta1.valid() || !pair.eta2.valid()) {
    throw DomainError("minimax pair has a non-positive variance; decrease epsilon");
  }
  return pair;
}

struct ScalingPoint {
  std::size_t n = 0;
  double epsilon = 0.0;
  double hellinger_sq = 0.0;
  double n_times_h2 = 0.0;
};

/// For each n, builds the pair at eps_n = n^{-1/(2r)} and reports n * h^2, with the
/// quadrature tolerance divided by n.
/// Bounded n * h^2 means the pair stays statistically indistinguishable at sample size n.
inline std::vector<ScalingPoint> hellinger_scaling_probe(const PolyCandidate& solution, double pi, double v0,
                                                         int r, const std::vector<std::size_t>& n_grid,
                                                         const QuadratureSpec& quad = {},
                                                         std::size_t workers = 1) {
  if (r < 1) throw std::invalid_argument("probe order r must be >= 1");
  const MixingConfig mix(pi);
  std::vector<ScalingPoint> out(n_grid.size());
  parallel_for(n_grid.size(), workers, [&](std::size_t i) {
    const std::size_t n = n_grid[i];
    if (n == 0) throw std::invalid_argument("probe sample sizes must be positive");
    const double eps = std::pow(static_cast<double>(n), -1.0 / (2.0 * r));
    const auto pair = minimax_pair(solution, eps, v0);
    // h^2 shrinks like 1/n along a solution, so the tolerance has to shrink with it.
    QuadratureSpec local = quad;
    local.abs_tol = quad.abs_tol / static_cast<double>(n);
    const double h2 = hellinger_sq(pair.eta1, pair.eta2, mix, local);
    out[i] = {n, eps, h2, static_cast<double>(n) * h2};
  });
  return out;
}

}  // namespace lsmix
