#pragma once

// Simulation harness: data along a parameter path eta_n, EM fits started near
// the truth, and log-log estimation of the empirical convergence rate.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lsmix/em.hpp"
#include "lsmix/loss.hpp"
#include "lsmix/model.hpp"
#include "lsmix/parallel.hpp"
#include "lsmix/polysys.hpp"
#include "lsmix/rng.hpp"

namespace lsmix {

enum class PathKind { A, S, S_prime };

inline std::string_view to_string(PathKind k) {
  switch (k) {
    case PathKind::A: return "A";
    case PathKind::S: return "S";
    case PathKind::S_prime: return "S_prime";
  }
  return "?";
}

inline PathKind parse_path_kind(std::string_view s) {
  if (s == "A") return PathKind::A;
  if (s == "S") return PathKind::S;
  if (s == "S_prime" || s == "S'") return PathKind::S_prime;
  throw std::invalid_argument("unknown model path '" + std::string(s) + "' (expected A, S or S_prime)");
}

/// A sequence of true parameters eta_n indexed by the sample size.
struct ModelPath {
  PathKind kind = PathKind::A;
  double pi = 0.25;
  PolyCandidate solution;     ///< unused for S_prime
  double rate_exponent = 1.0 / 12.0;  ///< eps_n = n^{-rate_exponent}
  double v0 = 1.0;

  /// x1 = x2 = 0, y2 given, y1 = -y2/c, y3 = -(y2/2)(1 + 1/c); eps_n = n^{-1/12}.
  /// Also defined at pi = 1/2, where it becomes the contrast run of the symmetric regime.
  static ModelPath model_a(double pi, double y2 = 0.1, double v0 = 1.0) {
    const MixingConfig mix(pi);
    const PolyCandidate s = mix.symmetric() ? PolyCandidate{0.0, 0.0, -y2, y2, -y2} : known_solution_asym_r5(pi, y2);
    return {PathKind::A, pi, s, 1.0 / 12.0, v0};
  }
  static ModelPath model_s(double v0 = 1.0) { return {PathKind::S, 0.5, kModelSPoint, 1.0 / 8.0, v0}; }
  static ModelPath model_s_prime(double v0 = 1.0) { return {PathKind::S_prime, 0.5, {}, 1.0 / 8.0, v0}; }

  MixingConfig mixing() const { return MixingConfig(pi); }
};

inline MixtureParams params_at(const ModelPath& path, std::size_t n) {
  if (n == 0) throw std::invalid_argument("sample size must be positive");
  const double nd = static_cast<double>(n);
  MixtureParams p;
  if (path.kind == PathKind::S_prime) {
    const double q = std::pow(nd, -0.25);
    p = {std::pow(nd, -0.125), path.v0 + q / 3.0, path.v0 + q / 6.0};
  } else {
    const double eps = std::pow(nd, -path.rate_exponent);
    const auto& s = path.solution;
    p = {eps * (s.x2 - s.x1), path.v0 + eps * eps * s.y1, path.v0 + eps * eps * (s.y2 + s.y3)};
  }
  if (!(p.v1 > 0.0 && p.v2 > 0.0)) {
    throw DomainError("model path has a non-positive variance at n = " + std::to_string(n));
  }
  return p;
}

/// k EM starting points drawn uniformly from
/// [theta - n^{-1/14}, theta + n^{-1/14}] x [v_j - n^{-1/7}, v_j + n^{-1/7}], then clamped into `space`.
inline std::vector<MixtureParams> init_draws(const MixtureParams& truth, std::size_t n, std::size_t k,
                                             std::uint64_t seed, const ParamSpace& space = {}) {
  if (k < 1) throw std::invalid_argument("init_draws needs k >= 1");
  if (n == 0) throw std::invalid_argument("sample size must be positive");
  const double nd = static_cast<double>(n);
  const double h_theta = std::pow(nd, -1.0 / 14.0);
  const double h_var = std::pow(nd, -1.0 / 7.0);
  std::vector<MixtureParams> out;
  out.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    SplitMix64 rng(derive_seed(seed, j));
    const double theta = rng.uniform(truth.theta - h_theta, truth.theta + h_theta);
    const double v1 = rng.uniform(truth.v1 - h_var, truth.v1 + h_var);
    const double v2 = rng.uniform(truth.v2 - h_var, truth.v2 + h_var);
    out.push_back(space.clamp({theta, v1, v2}));
  }
  return out;
}

enum class LossKind { psi, phi };

inline std::string_view to_string(LossKind k) { return k == LossKind::psi ? "psi" : "phi"; }
inline LossKind parse_loss_kind(std::string_view s) {
  if (s == "psi") return LossKind::psi;
  if (s == "phi") return LossKind::phi;
  throw std::invalid_argument("unknown loss kind '" + std::string(s) + "' (expected psi or phi)");
}

/// `count` integers spaced evenly in log scale over [lo, hi], strictly increasing.
inline std::vector<std::size_t> log_spaced_sizes(std::size_t lo, std::size_t hi, std::size_t count) {
  if (lo < 1 || hi < lo || count < 1) throw std::invalid_argument("invalid log-spaced grid");
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
    auto v = static_cast<std::size_t>(std::llround(std::exp(std::log(static_cast<double>(lo)) * (1.0 - t) +
                                                            std::log(static_cast<double>(hi)) * t)));
    if (!out.empty() && v <= out.back()) v = out.back() + 1;
    out.push_back(v);
  }
  return out;
}

struct ExperimentConfig {
  std::vector<std::size_t> n_values = log_spaced_sizes(1000, 100000, 100);
  std::size_t replications = 10;
  double loss_order = 6.0;
  LossKind loss_kind = LossKind::psi;
  EmConfig em{};
  std::uint64_t base_seed = 0;
  std::size_t workers = 1;
  /// Wall-clock time per cell is nondeterministic, so it is only recorded on request.
  bool record_timing = false;

  void validate() const {
    if (n_values.empty()) throw std::invalid_argument("n_values must be nonempty");
    for (std::size_t i = 0; i < n_values.size(); ++i) {
      if (n_values[i] < 2) throw std::invalid_argument("every sample size must be >= 2");
      if (i > 0 && n_values[i] <= n_values[i - 1]) {
        throw std::invalid_argument("n_values must be strictly increasing");
      }
    }
    if (replications < 1) throw std::invalid_argument("replications must be >= 1");
    LossOrder{loss_order};
    em.validate();
  }
};

struct ExperimentRecord {
  std::size_t n = 0;
  std::size_t replication = 0;
  double loss_psi = 0.0;
  double loss_phi = 0.0;
  double theta_hat = 0.0;
  double v1_hat = 0.0;
  double v2_hat = 0.0;
  double loglik = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double wall_time_ms = 0.0;

  double loss(LossKind kind) const noexcept { return kind == LossKind::psi ? loss_psi : loss_phi; }
};

inline std::uint64_t cell_seed(std::uint64_t base_seed, std::size_t n, std::size_t rep) {
  return derive_seed(base_seed, n, rep);
}

inline ExperimentRecord run_cell(const ModelPath& path, const ExperimentConfig& config, std::size_t n,
                                 std::size_t rep) {
  const auto start = std::chrono::steady_clock::now();
  const MixingConfig mix = path.mixing();
  const MixtureParams truth = params_at(path, n);
  const std::uint64_t seed = cell_seed(config.base_seed, n, rep);
  const auto data = sample(n, truth, mix, derive_seed(seed, 0));
  const auto inits = init_draws(truth, n, config.em.n_restarts, derive_seed(seed, 1), config.em.param_space);

  FitResult fit_result;
  try {
    fit_result = fit_multistart(data, mix, inits, config.em);
  } catch (const DegenerateResponsibilities&) {
    fit_result = fit(data, mix, inits.front(), config.em);
    fit_result.converged = false;
  }

  ExperimentRecord rec;
  rec.n = n;
  rec.replication = rep;
  const LossOrder order(config.loss_order);
  rec.loss_psi = psi_r(fit_result.estimate, truth, order);
  rec.loss_phi = phi_r(fit_result.estimate, truth, order);
  rec.theta_hat = fit_result.estimate.theta;
  rec.v1_hat = fit_result.estimate.v1;
  rec.v2_hat = fit_result.estimate.v2;
  rec.loglik = fit_result.loglik;
  rec.iterations = fit_result.iterations;
  rec.converged = fit_result.converged;
  if (config.record_timing) {
    rec.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return rec;
}

/// One record per (n, replication), in (n, replication) order regardless of scheduling.
inline std::vector<ExperimentRecord> run_experiment(const ModelPath& path, const ExperimentConfig& config) {
  config.validate();
  const std::size_t reps = config.replications;
  std::vector<ExperimentRecord> records(config.n_values.size() * reps);
  parallel_for(records.size(), config.workers, [&](std::size_t i) {
    records[i] = run_cell(path, config, config.n_values[i / reps], i % reps);
  });
  return records;
}

// ---------------------------------------------------------------------------
// Rate estimation

struct RateResult {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  std::size_t n_min = 0;
  std::size_t n_max = 0;
  std::size_t points = 0;
};

struct LossSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;  ///< empirical standard deviation across replications (n - 1 denominator)
  std::size_t count = 0;
};

inline std::vector<LossSummary> summarize_by_n(const std::vector<ExperimentRecord>& records, LossKind column) {
  std::map<std::size_t, std::vector<double>> groups;
  for (const auto& r : records) groups[r.n].push_back(r.loss(column));
  std::vector<LossSummary> out;
  for (const auto& [n, losses] : groups) {
    LossSummary s{n, 0.0, 0.0, losses.size()};
    for (const double l : losses) s.mean += l;
    s.mean /= static_cast<double>(losses.size());
    if (losses.size() > 1) {
      double ss = 0.0;
      for (const double l : losses) ss += (l - s.mean) * (l - s.mean);
      s.stddev = std::sqrt(ss / static_cast<double>(losses.size() - 1));
    }
    out.push_back(s);
  }
  return out;
}

/// OLS of log(mean loss) on log(n) over the largest ceil(fit_fraction * #n) sample sizes.
inline RateResult estimate_rate(const std::vector<ExperimentRecord>& records, double fit_fraction = 0.5,
                                LossKind column = LossKind::psi) {
  if (!(fit_fraction > 0.0 && fit_fraction <= 1.0)) {
    throw std::invalid_argument("fit_fraction must lie in (0, 1]");
  }
  const auto summary = summarize_by_n(records, column);
  const auto keep = static_cast<std::size_t>(std::ceil(fit_fraction * static_cast<double>(summary.size())));
  if (keep < 3) throw std::invalid_argument("rate estimation needs at least 3 distinct sample sizes in the fit range");
  const std::vector<LossSummary> used(summary.end() - static_cast<std::ptrdiff_t>(keep), summary.end());

  std::vector<double> xs, ys;
  for (const auto& s : used) {
    if (!(s.mean > 0.0) || !std::isfinite(s.mean)) {
      throw std::domain_error("mean loss at n = " + std::to_string(s.n) + " is not positive; cannot take logs");
    }
    xs.push_back(std::log(static_cast<double>(s.n)));
    ys.push_back(std::log(s.mean));
  }
  const double m = static_cast<double>(xs.size());
  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xbar += xs[i];
    ybar += ys[i];
  }
  xbar /= m;
  ybar /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
  }
  RateResult r;
  r.slope = sxy / sxx;
  r.intercept = ybar - r.slope * xbar;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (r.intercept + r.slope * xs[i]);
    rss += e * e;
  }
  r.stderr_slope = std::sqrt(rss / (m - 2.0) / sxx);
  r.n_min = used.front().n;
  r.n_max = used.back().n;
  r.points = used.size();
  return r;
}

// ---------------------------------------------------------------------------
// CSV persistence. Column order is part of the file contract.

inline constexpr std::string_view kRecordCsvHeader =
    "n,rep,loss_psi,loss_phi,theta_hat,v1_hat,v2_hat,loglik,iterations,converged,wall_time_ms";

/// 17 significant digits, '.' as decimal separator.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_records_csv(std::ostream& os, const std::vector<ExperimentRecord>& records) {
  os << kRecordCsvHeader << '\n';
  for (const auto& r : records) {
    os << r.n << ',' << r.replication << ',' << format_double(r.loss_psi) << ',' << format_double(r.loss_phi)
       << ',' << format_double(r.theta_hat) << ',' << format_double(r.v1_hat) << ','
       << format_double(r.v2_hat) << ',' << format_double(r.loglik) << ',' << r.iterations << ','
       << (r.converged ? 1 : 0) << ',' << format_double(r.wall_time_ms) << '\n';
  }
}

class CsvFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::vector<ExperimentRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw CsvFormatError("empty CSV input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRecordCsvHeader) throw CsvFormatError("unexpected CSV header: " + line);

  std::vector<ExperimentRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 11) {
      throw CsvFormatError("line " + std::to_string(lineno) + ": expected 11 fields, got " + std::to_string(f.size()));
    }
    auto num = [&](const std::string& s) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != s.size() || s.empty()) {
        throw CsvFormatError("line " + std::to_string(lineno) + ": malformed number '" + s + "'");
      }
      return v;
    };
    auto count = [&](const std::string& s) {
      const double v = num(s);
      if (v < 0.0 || v != std::floor(v)) {
        throw CsvFormatError("line " + std::to_string(lineno) + ": expected a non-negative integer, got '" + s + "'");
      }
      return static_cast<std::size_t>(v);
    };
    ExperimentRecord r;
    r.n = count(f[0]);
    r.replication = count(f[1]);
    r.loss_psi = num(f[2]);
    r.loss_phi = num(f[3]);
    r.theta_hat = num(f[4]);
    r.v1_hat = num(f[5]);
    r.v2_hat = num(f[6]);
    r.loglik = num(f[7]);
    r.iterations = count(f[8]);
    r.converged = count(f[9]) != 0;
    r.wall_time_ms = num(f[10]);
    out.push_back(r);
  }
  return out;
}

}  // namespace lsmix
