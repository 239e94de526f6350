#pragma once

// Parameter-space losses. psi_r compares components in a fixed order; phi_r
// also tries the relabelling (theta, v1, v2) -> (-theta, v2, v1) and keeps the
// smaller cost, so it is invariant to label switching.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "lsmix/model.hpp"

namespace lsmix {

/// Loss order r >= 1; non-integer orders are allowed.
class LossOrder {
 public:
  explicit LossOrder(double r) : r_(r) {
    if (!(r >= 1.0) || !std::isfinite(r)) {
      throw std::invalid_argument("loss order r must be a finite real >= 1");
    }
  }
  double value() const noexcept { return r_; }

 private:
  double r_;
};

namespace detail {

inline double matching_cost(double dtheta, double dv1, double dv2, double r) {
  return std::pow(std::abs(dtheta), r) + std::pow(std::abs(dv1), r / 2.0) +
         std::pow(std::abs(dv2), r / 2.0);
}

}  // namespace detail

/// (|theta_a - theta_b|^r + |v1_a - v1_b|^{r/2} + |v2_a - v2_b|^{r/2})^{1/r}
inline double psi_r(const MixtureParams& a, const MixtureParams& b, LossOrder order) {
  const double r = order.value();
  return std::pow(detail::matching_cost(a.theta - b.theta, a.v1 - b.v1, a.v2 - b.v2, r), 1.0 / r);
}

inline double phi_r(const MixtureParams& a, const MixtureParams& b, LossOrder order) {
  const double r = order.value();
  const double identity = detail::matching_cost(a.theta - b.theta, a.v1 - b.v1, a.v2 - b.v2, r);
  const double swapped = detail::matching_cost(a.theta + b.theta, a.v1 - b.v2, a.v2 - b.v1, r);
  return std::pow(std::min(identity, swapped), 1.0 / r);
}

using AtomPair = std::pair<double, double>;
using WeightPair = std::pair<double, double>;

/// Exact W_r between two-atom measures sharing the weight vector (p, 1 - p).
///
/// Couplings with both marginals equal to (p, 1 - p) form the segment
/// [[p - t, t], [t, 1 - p - t]], t in [0, min(p, 1 - p)]. The transport cost is
/// linear in t, so the optimum is attained at one of the two endpoints.
inline double wasserstein_two_atom(WeightPair weights_a, AtomPair atoms_a, WeightPair weights_b,
                                   AtomPair atoms_b, double r) {
  if (!(r >= 1.0)) throw std::invalid_argument("Wasserstein order must be >= 1");
  if (weights_a != weights_b) {
    throw std::invalid_argument("two-atom Wasserstein distance requires identical weight vectors");
  }
  const auto [p, q] = weights_a;
  if (!(p >= 0.0 && q >= 0.0) || std::abs(p + q - 1.0) > 1e-12) {
    throw std::invalid_argument("weights must be non-negative and sum to one");
  }
  auto cost = [&](double x, double y) { return std::pow(std::abs(x - y), r); };
  const double c00 = cost(atoms_a.first, atoms_b.first);
  const double c01 = cost(atoms_a.first, atoms_b.second);
  const double c10 = cost(atoms_a.second, atoms_b.first);
  const double c11 = cost(atoms_a.second, atoms_b.second);

  const double t_max = std::min(p, q);
  auto total = [&](double t) { return (p - t) * c00 + t * c01 + t * c10 + (q - t) * c11; };
  const double best = std::max(0.0, std::min(total(0.0), total(t_max)));
  return std::pow(best, 1.0 / r);
}

}  // namespace lsmix
