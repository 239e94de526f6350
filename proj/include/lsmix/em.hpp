#pragma once

// Maximum-likelihood fitting of the two-component mixture by EM, with every
// iterate projected onto the compact parameter box.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lsmix/errors.hpp"
#include "lsmix/model.hpp"
#include "lsmix/parallel.hpp"

namespace lsmix {

/// How the location update is computed in the M-step.
enum class ThetaUpdate {
  /// Denominator c*n + (1-c)*sum(w), exactly as the published update is printed.
  paper_verbatim,
  /// Stationary point of the complete-data objective with unit-variance weighting:
  /// denominator sum(w) + c^2 (n - sum(w)). Agrees with paper_verbatim when c = 1.
  exact_mstep,
  /// Conditional maximiser of the expected complete-data log-likelihood at the
  /// current variances (an ECM step). Not the default; kept for comparison.
  variance_weighted,
};

inline std::string_view to_string(ThetaUpdate mode) {
  switch (mode) {
    case ThetaUpdate::paper_verbatim: return "paper_verbatim";
    case ThetaUpdate::exact_mstep: return "exact_mstep";
    case ThetaUpdate::variance_weighted: return "variance_weighted";
  }
  return "unknown";
}

inline ThetaUpdate parse_theta_update(std::string_view name) {
  if (name == "paper_verbatim") return ThetaUpdate::paper_verbatim;
  if (name == "exact_mstep") return ThetaUpdate::exact_mstep;
  if (name == "variance_weighted") return ThetaUpdate::variance_weighted;
  throw std::invalid_argument("unknown theta update mode '" + std::string(name) + "'");
}

struct EmConfig {
  double epsilon = 1e-8;         ///< stop when |l(t+1) - l(t)| <= epsilon (absolute)
  std::size_t max_iters = 2000;  ///< iteration cap T
  std::size_t n_restarts = 5;
  ThetaUpdate theta_update = ThetaUpdate::exact_mstep;
  ParamSpace param_space{};
  bool record_trace = false;

  void validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("EM epsilon must be positive");
    if (max_iters < 1) throw std::invalid_argument("EM max_iters must be at least 1");
    if (n_restarts < 1) throw std::invalid_argument("EM n_restarts must be at least 1");
    param_space.validate();
  }
};

struct IterationRecord {
  double loglik;
  bool clamped;  ///< projection onto the parameter box changed the raw M-step output
};

struct FitResult {
  MixtureParams estimate;
  double loglik = -std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t restart_index = 0;
  /// Empty on a clean run; otherwise why EM stopped early.
  std::string diagnostic;
  /// Log-likelihood of the initial point followed by one entry per iteration,
  /// filled only when EmConfig::record_trace is set.
  std::vector<IterationRecord> trace;

  bool degenerate() const noexcept { return !diagnostic.empty(); }
};

/// Moments of the data that do not change across iterations.
struct SampleMoments {
  double n = 0.0;
  double sum_y = 0.0;
  double sum_y2 = 0.0;

  static SampleMoments of(std::span<const double> sample) {
    SampleMoments m;
    m.n = static_cast<double>(sample.size());
    for (const double y : sample) {
      m.sum_y += y;
      m.sum_y2 += y * y;
    }
    return m;
  }
};

/// Responsibility-weighted sums from one E-step, plus l_n at the E-step parameters.
struct EStepStats {
  double sum_w = 0.0;
  double sum_wy = 0.0;
  double sum_wy2 = 0.0;
  double loglik = 0.0;
};

namespace detail {

struct LogComponents {
  double log_a0, inv2v1, mean1;
  double log_b0, inv2v2, mean2;

  LogComponents(const MixtureParams& p, const MixingConfig& mix)
      : log_a0(std::log(mix.pi()) - kLogSqrtTwoPi - 0.5 * std::log(p.v1)),
        inv2v1(0.5 / p.v1),
        mean1(-p.theta),
        log_b0(std::log(mix.one_minus_pi()) - kLogSqrtTwoPi - 0.5 * std::log(p.v2)),
        inv2v2(0.5 / p.v2),
        mean2(mix.c() * p.theta) {}

  /// Responsibility of the first component; adds log g(y) split into max term and log1p factor.
  double weight(double y, double& log_max, double& one_plus_ratio) const {
    const double da = y - mean1;
    const double db = y - mean2;
    const double a = log_a0 - da * da * inv2v1;
    const double b = log_b0 - db * db * inv2v2;
    if (a >= b) {
      const double e = std::exp(b - a);
      log_max = a;
      one_plus_ratio = 1.0 + e;
      return 1.0 / one_plus_ratio;
    }
    const double e = std::exp(a - b);
    log_max = b;
    one_plus_ratio = 1.0 + e;
    return e / one_plus_ratio;
  }
};

/// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double term) {
    const double t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

/// Single pass over the data: responsibilities are folded straight into the
/// sufficient statistics. Each log1p(exp(-|a-b|)) factor lies in (1, 2], so
/// blocks of 64 are multiplied before taking one logarithm.
inline EStepStats accumulate(std::span<const double> sample, const MixtureParams& p,
                             const MixingConfig& mix, double* weights_out = nullptr) {
  const LogComponents lc(p, mix);
  EStepStats s;
  CompensatedSum log_max_sum;
  double log_factor_sum = 0.0;
  double block = 1.0;
  std::size_t in_block = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double y = sample[i];
    double log_max = 0.0;
    double factor = 1.0;
    const double w = lc.weight(y, log_max, factor);
    if (weights_out) weights_out[i] = w;
    log_max_sum.add(log_max);
    block *= factor;
    if (++in_block == 64) {
      log_factor_sum += std::log(block);
      block = 1.0;
      in_block = 0;
    }
    s.sum_w += w;
    s.sum_wy += w * y;
    s.sum_wy2 += w * y * y;
  }
  log_factor_sum += std::log(block);
  s.loglik = log_max_sum.value() + log_factor_sum;
  return s;
}

struct MStepOutcome {
  MixtureParams params;
  bool clamped = false;
};

inline MStepOutcome update_from_stats(const EStepStats& s, const SampleMoments& m,
                                      const MixingConfig& mix, ThetaUpdate mode,
                                      const ParamSpace& space, const MixtureParams& current) {
  const double n = m.n;
  const double sw = s.sum_w;
  const double sw_rest = n - sw;
  if (!(sw > 0.0) || !(sw_rest > 0.0) || !std::isfinite(sw)) {
    std::ostringstream os;
    os << "degenerate responsibilities: sum(w) = " << sw << " with n = " << n;
    throw DegenerateResponsibilities(os.str());
  }
  const double c = mix.c();
  // sum((1-w) y) and sum((1-w) y^2)
  const double rest_y = m.sum_y - s.sum_wy;
  const double rest_y2 = m.sum_y2 - s.sum_wy2;

  double theta = 0.0;
  switch (mode) {
    case ThetaUpdate::paper_verbatim:
      theta = (c * rest_y - s.sum_wy) / (c * n + (1.0 - c) * sw);
      break;
    case ThetaUpdate::exact_mstep:
      theta = (c * rest_y - s.sum_wy) / (sw + c * c * sw_rest);
      break;
    case ThetaUpdate::variance_weighted: {
      const double p1 = 1.0 / current.v1;
      const double p2 = 1.0 / current.v2;
      theta = (c * p2 * rest_y - p1 * s.sum_wy) / (p1 * sw + c * c * p2 * sw_rest);
      break;
    }
  }

  // sum(w (y + theta)^2) / sum(w) and sum((1-w)(y - c theta)^2) / (n - sum(w)), expanded.
  const double v1 = (s.sum_wy2 + 2.0 * theta * s.sum_wy + theta * theta * sw) / sw;
  const double ct = c * theta;
  const double v2 = (rest_y2 - 2.0 * ct * rest_y + ct * ct * sw_rest) / sw_rest;
  if (!std::isfinite(theta) || !std::isfinite(v1) || !std::isfinite(v2)) {
    throw DegenerateResponsibilities("M-step produced non-finite parameters");
  }

  const MixtureParams raw{theta, v1, v2};
  MStepOutcome out;
  out.params = space.clamp(raw);
  out.clamped = !(out.params == raw);
  return out;
}

}  // namespace detail

/// Posterior probability that each observation came from the first component.
inline std::vector<double> e_step(std::span<const double> sample, const MixtureParams& params,
                                  const MixingConfig& mix) {
  if (sample.empty()) throw EmptySampleError();
  params.validate();
  std::vector<double> w(sample.size());
  detail::accumulate(sample, params, mix, w.data());
  return w;
}

/// One M-step from explicit responsibilities; the result is clamped into `space`.
/// `current` is only consulted by ThetaUpdate::variance_weighted.
inline MixtureParams m_step(std::span<const double> sample, std::span<const double> weights,
                            const MixingConfig& mix, ThetaUpdate mode,
                            const ParamSpace& space = {}, const MixtureParams& current = {}) {
  if (sample.empty()) throw EmptySampleError();
  if (weights.size() != sample.size()) {
    throw std::invalid_argument("weights and sample must have the same length");
  }
  EStepStats s;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double w = weights[i];
    s.sum_w += w;
    s.sum_wy += w * sample[i];
    s.sum_wy2 += w * sample[i] * sample[i];
  }
  return detail::update_from_stats(s, SampleMoments::of(sample), mix, mode, space, current).params;
}

/// Runs EM from `init` until the log-likelihood changes by at most epsilon or
/// max_iters iterations have been made. Degenerate responsibilities end the run
/// early with the last valid iterate, converged = false and a diagnostic.
inline FitResult fit(std::span<const double> sample, const MixingConfig& mix,
                     const MixtureParams& init, const EmConfig& config) {
  if (sample.empty()) throw EmptySampleError();
  config.validate();
  init.validate();
  if (!config.param_space.contains(init)) {
    throw DomainError("EM initial point lies outside the parameter space");
  }

  const SampleMoments moments = SampleMoments::of(sample);
  FitResult result;
  result.estimate = init;
  EStepStats stats = detail::accumulate(sample, init, mix);
  result.loglik = stats.loglik;
  if (config.record_trace) result.trace.push_back({stats.loglik, false});

  for (std::size_t it = 1; it <= config.max_iters; ++it) {
    detail::MStepOutcome next;
    try {
      next = detail::update_from_stats(stats, moments, mix, config.theta_update,
                                       config.param_space, result.estimate);
    } catch (const DegenerateResponsibilities& e) {
      result.diagnostic = "iteration " + std::to_string(it) + ": " + e.what();
      result.converged = false;
      return result;
    }
    stats = detail::accumulate(sample, next.params, mix);
    if (config.record_trace) result.trace.push_back({stats.loglik, next.clamped});

    const double delta = std::abs(stats.loglik - result.loglik);
    result.estimate = next.params;
    result.loglik = stats.loglik;
    result.iterations = it;
    if (!std::isfinite(stats.loglik)) {
      result.diagnostic = "iteration " + std::to_string(it) + ": non-finite log-likelihood";
      return result;
    }
    if (delta <= config.epsilon) {
      result.converged = true;
      break;
    }
  }
  return result;
}

/// Fits from every initial point and keeps the highest log-likelihood among
/// the non-degenerate runs; ties go to the lowest restart index.
inline FitResult fit_multistart(std::span<const double> sample, const MixingConfig& mix,
                                std::span<const MixtureParams> inits, const EmConfig& config,
                                std::size_t workers = 1) {
  if (inits.empty()) throw std::invalid_argument("fit_multistart needs at least one initial point");
  std::vector<FitResult> runs(inits.size());
  parallel_for(inits.size(), workers, [&](std::size_t i) {
    runs[i] = fit(sample, mix, inits[i], config);
    runs[i].restart_index = i;
  });

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].degenerate() || !std::isfinite(runs[i].loglik)) continue;
    if (!best || runs[i].loglik > runs[*best].loglik) best = i;
  }
  if (!best) {
    std::ostringstream os;
    os << "all " << runs.size() << " EM restarts were degenerate:";
    for (const auto& r : runs) os << " [restart " << r.restart_index << "] " << r.diagnostic << ";";
    throw DegenerateResponsibilities(os.str());
  }
  return std::move(runs[*best]);
}

}  // namespace lsmix
