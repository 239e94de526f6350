#pragma once

// Two-component location-scale Gaussian mixture with known mixing proportion pi
// and zero global mean:
//
//   g(x; theta, v1, v2) = pi * N(x; -theta, v1) + (1 - pi) * N(x; c * theta, v2),
//   c = pi / (1 - pi).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsmix/errors.hpp"
#include "lsmix/rng.hpp"

namespace lsmix {

inline constexpr double kLogSqrtTwoPi = 0.91893853320467274178032973640562;

/// Known mixing proportion of the first component, 0 < pi <= 1/2.
class MixingConfig {
 public:
  explicit MixingConfig(double pi) : pi_(pi) {
    if (!(pi > 0.0 && pi <= 0.5)) {
      throw DomainError("mixing proportion pi must lie in (0, 1/2], got " + std::to_string(pi));
    }
  }

  double pi() const noexcept { return pi_; }
  double one_minus_pi() const noexcept { return 1.0 - pi_; }
  /// Ratio pi / (1 - pi); recomputed on every call, never stored.
  double c() const noexcept { return pi_ / (1.0 - pi_); }
  bool symmetric() const noexcept { return pi_ == 0.5; }

  friend bool operator==(const MixingConfig&, const MixingConfig&) = default;

 private:
  double pi_;
};

/// One point eta = (theta, v1, v2) of the parameter space.
struct MixtureParams {
  double theta = 0.0;
  double v1 = 1.0;
  double v2 = 1.0;

  bool valid() const noexcept {
    return std::isfinite(theta) && std::isfinite(v1) && std::isfinite(v2) && v1 > 0.0 && v2 > 0.0;
  }

  void validate() const {
    if (!valid()) {
      std::ostringstream os;
      os << "invalid mixture parameters (theta=" << theta << ", v1=" << v1 << ", v2=" << v2
         << "): variances must be positive and finite";
      throw DomainError(os.str());
    }
  }

  double mean_first(const MixingConfig&) const noexcept { return -theta; }
  double mean_second(const MixingConfig& mix) const noexcept { return mix.c() * theta; }

  friend bool operator==(const MixtureParams&, const MixtureParams&) = default;
};

/// Compact box H = Theta x Omega^2. Variances are bounded in [v_min, v_max].
struct ParamSpace {
  double theta_min = -10.0;
  double theta_max = 10.0;
  double v_min = 0.01;
  double v_max = 100.0;

  void validate() const {
    if (!(theta_min < 0.0 && 0.0 < theta_max)) {
      throw DomainError("parameter space must contain theta = 0 in its interior");
    }
    if (!(0.0 < v_min && v_min < v_max)) {
      throw DomainError("parameter space requires 0 < v_min < v_max");
    }
  }

  bool contains(const MixtureParams& p) const noexcept {
    return p.theta >= theta_min && p.theta <= theta_max && p.v1 >= v_min && p.v1 <= v_max &&
           p.v2 >= v_min && p.v2 <= v_max;
  }

  MixtureParams clamp(const MixtureParams& p) const noexcept {
    return {std::clamp(p.theta, theta_min, theta_max), std::clamp(p.v1, v_min, v_max),
            std::clamp(p.v2, v_min, v_max)};
  }

  friend bool operator==(const ParamSpace&, const ParamSpace&) = default;
};

namespace detail {

inline void require_positive_variance(double v) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError("variance must be positive and finite, got " + std::to_string(v));
  }
}

}  // namespace detail

inline double gaussian_log_pdf(double x, double theta, double v) {
  detail::require_positive_variance(v);
  const double d = x - theta;
  return -kLogSqrtTwoPi - 0.5 * std::log(v) - d * d / (2.0 * v);
}

/// Density of N(theta, v) at x.
inline double gaussian_pdf(double x, double theta, double v) {
  detail::require_positive_variance(v);
  const double d = x - theta;
  return std::exp(-d * d / (2.0 * v)) / std::sqrt(2.0 * std::numbers::pi * v);
}

inline double gaussian_cdf(double x, double theta, double v) {
  detail::require_positive_variance(v);
  return 0.5 * std::erfc(-(x - theta) / std::sqrt(2.0 * v));
}

inline double mixture_pdf(double x, const MixtureParams& p, const MixingConfig& mix) {
  return mix.pi() * gaussian_pdf(x, -p.theta, p.v1) +
         mix.one_minus_pi() * gaussian_pdf(x, mix.c() * p.theta, p.v2);
}

/// log g(x; eta) with a log-sum-exp guard, finite even far in the tails.
inline double mixture_log_pdf(double x, const MixtureParams& p, const MixingConfig& mix) {
  const double a = std::log(mix.pi()) + gaussian_log_pdf(x, -p.theta, p.v1);
  const double b = std::log(mix.one_minus_pi()) + gaussian_log_pdf(x, mix.c() * p.theta, p.v2);
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

inline double mixture_cdf(double x, const MixtureParams& p, const MixingConfig& mix) {
  return mix.pi() * gaussian_cdf(x, -p.theta, p.v1) +
         mix.one_minus_pi() * gaussian_cdf(x, mix.c() * p.theta, p.v2);
}

struct LabeledSample {
  std::vector<double> values;
  /// 1 when the draw came from the first component N(-theta, v1).
  std::vector<std::uint8_t> from_first;
};

/// Draw i consumes stream outputs 2i (component label) and 2i+1 (normal variate).
inline LabeledSample sample_labeled(std::size_t n, const MixtureParams& p, const MixingConfig& mix,
                                    std::uint64_t seed) {
  if (n == 0) throw EmptySampleError();
  p.validate();
  const SplitMix64 stream(seed);
  const double mean1 = -p.theta;
  const double mean2 = mix.c() * p.theta;
  const double sd1 = std::sqrt(p.v1);
  const double sd2 = std::sqrt(p.v2);

  LabeledSample out;
  out.values.resize(n);
  out.from_first.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool first = SplitMix64::to_open_unit(stream.at(2 * i)) < mix.pi();
    const double z = normal_quantile(SplitMix64::to_open_unit(stream.at(2 * i + 1)));
    out.values[i] = first ? mean1 + sd1 * z : mean2 + sd2 * z;
    out.from_first[i] = first ? 1 : 0;
  }
  return out;
}

inline std::vector<double> sample(std::size_t n, const MixtureParams& p, const MixingConfig& mix,
                                  std::uint64_t seed) {
  return sample_labeled(n, p, mix, seed).values;
}

/// Sample log-likelihood l_n(eta) = sum_i log g(Y_i; eta).
inline double log_likelihood(std::span<const double> sample, const MixtureParams& p,
                             const MixingConfig& mix) {
  if (sample.empty()) throw EmptySampleError();
  p.validate();
  double sum = 0.0;
  double comp = 0.0;  // Neumaier compensation
  for (const double x : sample) {
    const double term = mixture_log_pdf(x, p, mix);
    const double t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return sum + comp;
}

// ---------------------------------------------------------------------------
// Analytic partial derivatives of the Gaussian density in (theta, v).
//
// The theta-derivatives follow d^k f / d theta^k = f * He_k(z) / v^{k/2} with
// z = (x - theta) / sqrt(v) and He_k the probabilists' Hermite polynomials.
// Writing d = x - theta and w = 1/v, this is f times a polynomial in (d, w);
// each v-derivative is then applied to that polynomial exactly using
//   d/dv [f d^i w^j] = f [ -(j + 1/2) d^i w^{j+1} + (1/2) d^{i+2} w^{j+2} ].

inline constexpr int kMaxThetaOrder = 4;
inline constexpr int kMaxVarianceOrder = 2;

/// Coefficients of He_k, lowest degree first.
inline std::vector<double> hermite_coefficients(int k) {
  if (k < 0) throw std::out_of_range("Hermite order must be non-negative");
  std::vector<double> prev{1.0};
  if (k == 0) return prev;
  std::vector<double> cur{0.0, 1.0};
  for (int m = 1; m < k; ++m) {
    std::vector<double> next(cur.size() + 1, 0.0);
    for (std::size_t i = 0; i < cur.size(); ++i) next[i + 1] += cur[i];
    for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= m * prev[i];
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

inline double hermite_he(int k, double z) {
  double prev = 1.0;
  if (k == 0) return prev;
  double cur = z;
  for (int m = 1; m < k; ++m) {
    const double next = z * cur - m * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// k-th theta-derivative of N(x; theta, v) via the Hermite identity.
inline double gaussian_theta_derivative(double x, double theta, double v, int k) {
  if (k < 0) throw std::out_of_range("derivative order must be non-negative");
  const double z = (x - theta) / std::sqrt(v);
  return gaussian_pdf(x, theta, v) * hermite_he(k, z) / std::pow(v, 0.5 * k);
}

/// d^{order_theta} d^{order_v} f(x; theta, v) / d theta^{order_theta} d v^{order_v}.
inline double gaussian_partials(double x, double theta, double v, int order_theta, int order_v) {
  if (order_theta < 0 || order_theta > kMaxThetaOrder || order_v < 0 || order_v > kMaxVarianceOrder) {
    throw std::out_of_range("unsupported derivative order (theta " + std::to_string(order_theta) +
                            ", v " + std::to_string(order_v) + ")");
  }
  detail::require_positive_variance(v);

  constexpr int kDeg = kMaxThetaOrder + 2 * kMaxVarianceOrder + 1;
  using Poly = std::array<std::array<double, kDeg>, kDeg>;  // poly[i][j] multiplies d^i w^j
  Poly poly{};
  const auto he = hermite_coefficients(order_theta);
  for (int k = 0; k < static_cast<int>(he.size()); ++k) {
    if (he[k] != 0.0) poly[k][(k + order_theta) / 2] = he[k];
  }
  for (int step = 0; step < order_v; ++step) {
    Poly next{};
    for (int i = 0; i < kDeg; ++i) {
      for (int j = 0; j < kDeg; ++j) {
        const double a = poly[i][j];
        if (a == 0.0) continue;
        next[i][j + 1] -= (j + 0.5) * a;
        next[i + 2][j + 2] += 0.5 * a;
      }
    }
    poly = next;
  }

  const double d = x - theta;
  const double w = 1.0 / v;
  double acc = 0.0;
  double dpow = 1.0;
  for (int i = 0; i < kDeg; ++i, dpow *= d) {
    double wpow = 1.0;
    for (int j = 0; j < kDeg; ++j, wpow *= w) {
      if (poly[i][j] != 0.0) acc += poly[i][j] * dpow * wpow;
    }
  }
  return gaussian_pdf(x, theta, v) * acc;
}

}  // namespace lsmix
