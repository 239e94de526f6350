#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "io.hpp"
#include "lsmix/lsmix.hpp"

namespace lsmix::cli {

struct Common {
  std::string command_line;
  std::optional<std::uint64_t> seed;
  std::size_t workers = default_worker_count();
  std::string manifest;  ///< explicit manifest path; empty = next to --out, or none for stdout

  std::uint64_t seed_or_default() const { return seed.value_or(0); }
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Sends `content` to --out (or stdout) and writes the manifest beside it.
inline void emit(const Common& common, const std::string& out_path, const std::string& content, json config,
                 const Stopwatch& clock, std::vector<std::string> extra_outputs = {}) {
  if (out_path.empty()) {
    std::cout << content;
    std::cout.flush();
  } else {
    write_text_file(out_path, content);
    extra_outputs.insert(extra_outputs.begin(), out_path);
  }
  std::string manifest = common.manifest;
  if (manifest.empty() && !out_path.empty()) manifest = manifest_path_for(out_path);
  if (manifest.empty()) return;
  RunManifest m;
  m.command_line = common.command_line;
  m.config = std::move(config);
  m.seed = common.seed_or_default();
  m.workers = common.workers;
  m.wall_time_s = clock.seconds();
  m.outputs = std::move(extra_outputs);
  m.write(manifest);
}

inline MixtureParams triple(double theta, double v1, double v2) {
  const MixtureParams p{theta, v1, v2};
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
  double pi = 0.0;
  std::string data_path;
  std::size_t draws = 0;
  double theta = 0.0, v1 = 1.0, v2 = 1.0;  ///< generating parameters for --draws
  std::vector<double> init_center;          ///< optional (theta, v1, v2) for the near-truth protocol
  EmConfig em{};
  std::string out;
};

/// Starting points when no reference parameter is given: theta uniform in
/// +-1.5 sd around 0 and variances uniform in [0.2, 1] x sample variance.
inline std::vector<MixtureParams> spread_inits(std::span<const double> data, std::size_t k, std::uint64_t seed,
                                               const ParamSpace& space) {
  const auto m = SampleMoments::of(data);
  const double mean = m.sum_y / m.n;
  const double var = std::max(m.sum_y2 / m.n - mean * mean, space.v_min);
  const double sd = std::sqrt(var);
  std::vector<MixtureParams> out;
  for (std::size_t j = 0; j < k; ++j) {
    SplitMix64 rng(derive_seed(seed, j));
    const double theta = rng.uniform(-1.5 * sd, 1.5 * sd);
    const double a = rng.uniform(0.2 * var, var);
    const double b = rng.uniform(0.2 * var, var);
    out.push_back(space.clamp({theta, a, b}));
  }
  return out;
}

inline int cmd_fit(const FitOptions& o, const Common& common) {
  const Stopwatch clock;
  const MixingConfig mix(o.pi);
  o.em.validate();
  const std::uint64_t seed = common.seed_or_default();

  json config{{"command", "fit"}, {"pi", o.pi}, {"em", em_to_json(o.em)}, {"seed", seed}};
  std::vector<double> data;
  if (!o.data_path.empty()) {
    if (o.draws != 0) throw CliError(kUsage, "give either --data or --draws, not both");
    const std::string text = read_text_file(o.data_path);
    data = parse_data(text, o.data_path);
    config["data"] = {{"path", o.data_path}, {"digest", "fnv1a64:" + hex64(fnv1a64(text))}};
  } else if (o.draws > 0) {
    const auto truth = triple(o.theta, o.v1, o.v2);
    data = sample(o.draws, truth, mix, derive_seed(seed, 0));
    config["data"] = {{"draws", o.draws}, {"theta", o.theta}, {"v1", o.v1}, {"v2", o.v2}};
  } else {
    throw CliError(kUsage, "no input: give --data FILE or --draws N");
  }

  std::vector<MixtureParams> inits;
  if (!o.init_center.empty()) {
    if (o.init_center.size() != 3) throw CliError(kUsage, "--init-center takes theta,v1,v2");
    const auto center = triple(o.init_center[0], o.init_center[1], o.init_center[2]);
    inits = init_draws(center, data.size(), o.em.n_restarts, derive_seed(seed, 1), o.em.param_space);
    config["init_center"] = o.init_center;
  } else {
    inits = spread_inits(data, o.em.n_restarts, derive_seed(seed, 1), o.em.param_space);
  }

  FitResult r;
  try {
    r = fit_multistart(data, mix, inits, o.em, common.workers);
  } catch (const DegenerateResponsibilities& e) {
    throw CliError(kDegenerate, e.what());
  }
  const json result{{"theta", r.estimate.theta},     {"v1", r.estimate.v1},
                    {"v2", r.estimate.v2},           {"loglik", r.loglik},
                    {"iterations", r.iterations},    {"converged", r.converged},
                    {"restart_index", r.restart_index}, {"n", data.size()},
                    {"pi", o.pi}};
  emit(common, o.out, result.dump(2) + "\n", config, clock);
  return kOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::string config_path;
  std::optional<bool> record_timing;
  // draws mode
  std::size_t draws = 0;
  double pi = 0.0;
  double theta = 0.0, v1 = 1.0, v2 = 1.0;
  std::string out;
};

inline int cmd_simulate(const SimulateOptions& o, const Common& common) {
  const Stopwatch clock;
  if (!o.config_path.empty() && o.draws > 0) throw CliError(kUsage, "give either --config or --draws, not both");

  if (o.draws > 0) {
    const MixingConfig mix(o.pi);
    const auto truth = triple(o.theta, o.v1, o.v2);
    const std::uint64_t seed = common.seed_or_default();
    const auto data = sample(o.draws, truth, mix, derive_seed(seed, 0));
    const json config{{"command", "simulate-draws"}, {"draws", o.draws}, {"pi", o.pi}, {"theta", o.theta},
                      {"v1", o.v1}, {"v2", o.v2}, {"seed", seed}};
    emit(common, o.out, format_data(data), config, clock);
    return kOk;
  }
  if (o.config_path.empty()) throw CliError(kUsage, "no input: give --config FILE or --draws N");

  json raw;
  try {
    raw = json::parse(read_text_file(o.config_path));
  } catch (const json::parse_error& e) {
    throw CliError(kUsage, o.config_path + ": invalid JSON: " + e.what());
  }
  SimulationSpec spec = parse_simulation_config(raw);
  if (common.seed) spec.experiment.base_seed = *common.seed;
  if (o.record_timing) spec.experiment.record_timing = *o.record_timing;
  spec.experiment.workers = common.workers;

  const auto records = run_experiment(spec.path, spec.experiment);
  std::ostringstream csv;
  write_records_csv(csv, records);
  json config = spec.canonical();
  config["command"] = "simulate";

  Common c = common;
  c.seed = spec.experiment.base_seed;
  emit(c, o.out, csv.str(), config, clock);
  return kOk;
}

// ---------------------------------------------------------------------------
// rate

struct RateOptions {
  std::string csv_path;
  double fit_fraction = 0.5;
  std::string loss_column = "auto";
  std::string aggregate_out;
  std::vector<double> expect_range;
  std::string out;
};

/// "auto" takes the loss recorded in the simulate manifest beside the CSV, else psi.
inline LossKind resolve_loss_column(const std::string& choice, const std::string& csv_path) {
  if (choice != "auto") return parse_loss_kind(choice);
  std::ifstream in(manifest_path_for(csv_path));
  if (!in) return LossKind::psi;
  try {
    const json m = json::parse(in);
    return parse_loss_kind(m.at("config").at("loss_kind").get<std::string>());
  } catch (const std::exception&) {
    return LossKind::psi;
  }
}

inline int cmd_rate(const RateOptions& o, const Common& common) {
  const Stopwatch clock;
  const std::string text = read_text_file(o.csv_path);
  std::istringstream is(text);
  std::vector<ExperimentRecord> records;
  try {
    records = read_records_csv(is);
  } catch (const CsvFormatError& e) {
    throw CliError(kUsage, o.csv_path + ": " + e.what());
  }
  const LossKind column = resolve_loss_column(o.loss_column, o.csv_path);
  const RateResult r = estimate_rate(records, o.fit_fraction, column);

  json result{{"slope", r.slope},
              {"stderr", r.stderr_slope},
              {"intercept", r.intercept},
              {"n_min", r.n_min},
              {"n_max", r.n_max},
              {"points", r.points},
              {"fit_fraction", o.fit_fraction},
              {"loss_column", "loss_" + std::string(to_string(column))}};
  int code = kOk;
  if (!o.expect_range.empty()) {
    if (o.expect_range.size() != 2) throw CliError(kUsage, "--expect-range takes lo,hi");
    const bool inside = r.slope >= o.expect_range[0] && r.slope <= o.expect_range[1];
    result["expect_range"] = o.expect_range;
    result["within_expected_range"] = inside;
    if (!inside) code = kAssertionFailed;
  }

  std::vector<std::string> extra;
  if (!o.aggregate_out.empty()) {
    std::string agg = "n,count,mean,std\n";
    for (const auto& s : summarize_by_n(records, column)) {
      agg += std::to_string(s.n) + "," + std::to_string(s.count) + "," + format_double(s.mean) + "," +
             format_double(s.stddev) + "\n";
    }
    write_text_file(o.aggregate_out, agg);
    extra.push_back(o.aggregate_out);
  }
  const json config{{"command", "rate"},
                    {"csv", {{"path", o.csv_path}, {"digest", "fnv1a64:" + hex64(fnv1a64(text))}}},
                    {"fit_fraction", o.fit_fraction},
                    {"loss_column", std::string(to_string(column))}};
  emit(common, o.out, result.dump(2) + "\n", config, clock, extra);
  return code;
}

// ---------------------------------------------------------------------------
// verify-polysys

struct VerifyOptions {
  std::string system = "sym";
  int r = 4;
  double pi = 0.25;
  std::size_t starts = 1000;
  std::optional<double> tol;
  std::vector<double> candidate;
  std::string family;
  std::optional<double> family_param;
  std::string expect = "auto";
  std::string out;
};

inline json candidate_json(const PolyCandidate& s) {
  return json{{"x1", s.x1}, {"x2", s.x2}, {"y1", s.y1}, {"y2", s.y2}, {"y3", s.y3}};
}

inline int cmd_verify_polysys(const VerifyOptions& o, const Common& common) {
  const Stopwatch clock;
  if (o.system != "asym" && o.system != "sym") throw CliError(kUsage, "--system must be asym or sym");
  const bool sym = o.system == "sym";
  const PolySystem system = sym ? PolySystem::symmetric(o.r) : PolySystem::asymmetric(o.pi, o.r);
  const std::uint64_t seed = common.seed_or_default();

  json config{{"command", "verify-polysys"}, {"system", o.system}, {"r", o.r}};
  if (!sym) config["pi"] = o.pi;
  json result{{"system", o.system}, {"r", o.r}};
  if (!sym) result["pi"] = o.pi;

  bool expect_solution = false;
  bool found = false;
  const bool candidate_mode = !o.candidate.empty() || !o.family.empty();
  if (candidate_mode) {
    if (!o.candidate.empty() && !o.family.empty()) throw CliError(kUsage, "give --candidate or --family, not both");
    PolyCandidate s;
    bool family_feasible = true;
    if (!o.candidate.empty()) {
      if (o.candidate.size() != 5) throw CliError(kUsage, "--candidate takes x1,x2,y1,y2,y3");
      s = {o.candidate[0], o.candidate[1], o.candidate[2], o.candidate[3], o.candidate[4]};
    } else if (o.family == "asym-r5") {
      if (sym) throw CliError(kUsage, "family asym-r5 belongs to the asymmetric system");
      s = known_solution_asym_r5(o.pi, o.family_param.value_or(0.1));
    } else if (o.family == "sym-r3") {
      s = symmetric_r3_solution(1.0, o.family_param.value_or(0.5));
    } else if (o.family == "sym-violator") {
      s = symmetric_inequality_violator(o.family_param.value_or(1.0));
      family_feasible = false;
    } else if (o.family == "model-s") {
      s = kModelSPoint;
    } else {
      throw CliError(kUsage, "unknown family '" + o.family + "' (asym-r5, sym-r3, sym-violator, model-s)");
    }
    const double tol = o.tol.value_or(1e-12);
    const auto res = system.evaluate(s);
    const bool equalities_hold = res.max_abs() <= tol;
    const bool feasible = !sym || (res.inequality_slack && *res.inequality_slack >= 0.0);
    found = equalities_hold && feasible && !s.is_trivial();
    expect_solution = family_feasible;

    config["candidate"] = candidate_json(s);
    config["tol"] = tol;
    result["mode"] = "candidate";
    result["candidate"] = candidate_json(s);
    result["residuals"] = res.equalities;
    result["max_abs_residual"] = res.max_abs();
    result["residual_norm"] = res.norm();
    if (res.inequality_slack) result["inequality_slack"] = *res.inequality_slack;
    result["equalities_hold"] = equalities_hold;
    result["feasible"] = feasible;
    result["tol"] = tol;
    result["verdict"] = found ? "candidate is a nontrivial feasible solution"
                              : "candidate is not a nontrivial feasible solution";
  } else {
    const double tol = o.tol.value_or(1e-6);
    FalsifyOptions fo;
    fo.workers = common.workers;
    const auto rep = falsify(system, o.starts, seed, tol, fo);
    found = rep.found;
    expect_solution = sym ? o.r <= 3 : o.r <= 5;

    config["starts"] = o.starts;
    config["seed"] = seed;
    config["tol"] = tol;
    result["mode"] = "falsify";
    result["n_starts"] = rep.n_starts;
    result["seed"] = rep.seed;
    result["tol"] = rep.tol;
    result["hits"] = rep.hits;
    result["found"] = rep.found;
    result["best"] = candidate_json(rep.best);
    result["best_residual_norm"] = rep.best_residual_norm;
    result["best_start"] = rep.best_start;
    if (rep.best_slack) result["best_slack"] = *rep.best_slack;
    result["verdict"] = found ? "found a nontrivial feasible solution" : "no nontrivial feasible solution";
  }

  if (o.expect == "solution") {
    expect_solution = true;
  } else if (o.expect == "no-solution") {
    expect_solution = false;
  } else if (o.expect != "auto") {
    throw CliError(kUsage, "--expect must be auto, solution or no-solution");
  }
  config["expect"] = expect_solution ? "solution" : "no-solution";
  result["expected"] = expect_solution ? "solution" : "no-solution";
  const bool holds = found == expect_solution;
  result["assertion_holds"] = holds;
  emit(common, o.out, result.dump(2) + "\n", config, clock);
  return holds ? kOk : kAssertionFailed;
}

// ---------------------------------------------------------------------------
// distance

struct DistanceOptions {
  double pi = 0.5;
  std::vector<double> a;  ///< theta, v1, v2
  std::vector<double> b;
  double abs_tol = QuadratureSpec{}.abs_tol;
  std::string probe;  ///< "", "solution" or "control"
  int probe_r = 6;
  std::vector<std::size_t> probe_n = {100, 1000, 10000, 100000, 1000000};
  double max_ratio = 10.0;
  double min_growth = 2.0;
  std::string out;
};

/// A point that misses the l = 2 equation, so its pair separates at rate eps^2.
inline constexpr PolyCandidate kProbeControl{0.0, 0.0, 0.1, 0.1, 0.1};

inline int cmd_distance(const DistanceOptions& o, const Common& common) {
  const Stopwatch clock;
  QuadratureSpec quad;
  quad.abs_tol = o.abs_tol;
  quad.validate();

  if (o.probe.empty()) {
    if (o.a.size() != 3 || o.b.size() != 3) throw CliError(kUsage, "distance needs --a and --b as theta,v1,v2");
    const MixingConfig mix(o.pi);
    const auto pa = triple(o.a[0], o.a[1], o.a[2]);
    const auto pb = triple(o.b[0], o.b[1], o.b[2]);
    const double h2 = hellinger_sq(pa, pb, mix, quad);
    const double tv = total_variation(pa, pb, mix, quad);
    const json result{{"hellinger_sq", h2}, {"hellinger", std::sqrt(std::max(h2, 0.0))}, {"total_variation", tv}};
    const json config{{"command", "distance"}, {"pi", o.pi}, {"a", o.a}, {"b", o.b}, {"abs_tol", o.abs_tol}};
    emit(common, o.out, result.dump(2) + "\n", config, clock);
    return kOk;
  }

  if (o.probe != "solution" && o.probe != "control") throw CliError(kUsage, "--probe must be solution or control");
  if (o.probe_n.size() < 2) throw CliError(kUsage, "the probe needs at least two sample sizes");
  const bool control = o.probe == "control";
  const double pi = o.pi == 0.5 ? 0.25 : o.pi;
  const PolyCandidate s = control ? kProbeControl : known_solution_asym_r5(pi, 0.1);
  const auto points = hellinger_scaling_probe(s, pi, 1.0, o.probe_r, o.probe_n, quad, common.workers);

  json table = json::array();
  double lo = points.front().n_times_h2, hi = lo, worst_growth = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    table.push_back({{"n", p.n}, {"epsilon", p.epsilon}, {"hellinger_sq", p.hellinger_sq}, {"n_times_h2", p.n_times_h2}});
    lo = std::min(lo, p.n_times_h2);
    hi = std::max(hi, p.n_times_h2);
    if (i > 0) {
      const double decades = std::log10(static_cast<double>(p.n) / static_cast<double>(points[i - 1].n));
      worst_growth = std::min(worst_growth, std::pow(p.n_times_h2 / points[i - 1].n_times_h2, 1.0 / decades));
    }
  }
  const double ratio = hi / lo;
  const bool holds = control ? worst_growth >= o.min_growth : ratio <= o.max_ratio;
  const json result{{"probe", o.probe},
                    {"pi", pi},
                    {"r", o.probe_r},
                    {"solution", candidate_json(s)},
                    {"points", table},
                    {"max_over_min", ratio},
                    {"min_growth_per_decade", worst_growth},
                    {"assertion_holds", holds}};
  const json config{{"command", "distance-probe"}, {"probe", o.probe}, {"pi", pi},       {"r", o.probe_r},
                    {"n", o.probe_n},              {"abs_tol", o.abs_tol}, {"max_ratio", o.max_ratio},
                    {"min_growth", o.min_growth}};
  emit(common, o.out, result.dump(2) + "\n", config, clock);
  return holds ? kOk : kAssertionFailed;
}

}  // namespace lsmix::cli
