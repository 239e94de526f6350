#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using namespace lsmix;
using namespace lsmix::cli;

void add_common(CLI::App* sub, Common& common, bool with_seed) {
  if (with_seed) sub->add_option("--seed", common.seed, "Base seed for all randomness (default 0)");
  sub->add_option("--workers", common.workers, "Worker threads (default: hardware concurrency)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--manifest", common.manifest, "Manifest path (default: <out>.manifest.json)");
}

void add_em_options(CLI::App* sub, EmConfig& em, std::string& mode, std::vector<double>& theta_bounds,
                    std::vector<double>& var_bounds) {
  sub->add_option("--epsilon", em.epsilon, "Stop when the log-likelihood changes by at most this much");
  sub->add_option("--max-iters", em.max_iters, "Iteration cap per restart");
  sub->add_option("--restarts", em.n_restarts, "Number of EM starting points");
  sub->add_option("--theta-update", mode, "exact_mstep | paper_verbatim | variance_weighted");
  sub->add_option("--theta-bounds", theta_bounds, "lo,hi")->delimiter(',')->expected(2);
  sub->add_option("--variance-bounds", var_bounds, "lo,hi")->delimiter(',')->expected(2);
}

void finish_em(EmConfig& em, const std::string& mode, const std::vector<double>& tb, const std::vector<double>& vb) {
  em.theta_update = parse_theta_update(mode);
  if (!tb.empty()) em.param_space.theta_min = tb.at(0), em.param_space.theta_max = tb.at(1);
  if (!vb.empty()) em.param_space.v_min = vb.at(0), em.param_space.v_max = vb.at(1);
  em.validate();
}

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Location-scale Gaussian mixture toolkit: EM fits, simulation sweeps, rate estimates, "
               "polynomial-system checks and density distances"};
  app.set_version_flag("--version", std::string(LSMIX_VERSION));
  app.require_subcommand(1);

  Common common;
  common.command_line = join_args(argc, argv);

  FitOptions fit_o;
  std::string fit_mode = "exact_mstep";
  std::vector<double> fit_tb, fit_vb;
  auto* fit = app.add_subcommand("fit", "Fit the mixture by multistart EM");
  fit->add_option("--pi", fit_o.pi, "Known weight of the first component, in (0, 1/2]")->required();
  fit->add_option("--data", fit_o.data_path, "Input file, one observation per line");
  fit->add_option("--draws", fit_o.draws, "Generate this many observations instead of reading a file");
  fit->add_option("--theta", fit_o.theta, "Generating theta for --draws");
  fit->add_option("--v1", fit_o.v1, "Generating first-component variance for --draws");
  fit->add_option("--v2", fit_o.v2, "Generating second-component variance for --draws");
  fit->add_option("--init-center", fit_o.init_center, "theta,v1,v2: draw starts around this point")
      ->delimiter(',')
      ->expected(3);
  fit->add_option("--out", fit_o.out, "Result JSON path (default stdout)");
  add_em_options(fit, fit_o.em, fit_mode, fit_tb, fit_vb);
  add_common(fit, common, true);

  SimulateOptions sim_o;
  bool record_timing = false;
  auto* sim = app.add_subcommand("simulate", "Run a simulation sweep (--config) or write raw draws (--draws)");
  sim->add_option("--config", sim_o.config_path, "Experiment config JSON");
  sim->add_flag("--record-timing", record_timing, "Fill wall_time_ms (makes the CSV run-dependent)");
  sim->add_option("--draws", sim_o.draws, "Write this many observations, one per line");
  sim->add_option("--pi", sim_o.pi, "Mixing weight for --draws");
  sim->add_option("--theta", sim_o.theta, "theta for --draws");
  sim->add_option("--v1", sim_o.v1, "First-component variance for --draws");
  sim->add_option("--v2", sim_o.v2, "Second-component variance for --draws");
  sim->add_option("--out", sim_o.out, "Output path (default stdout)");
  add_common(sim, common, true);

  RateOptions rate_o;
  auto* rate = app.add_subcommand("rate", "Estimate the log-log convergence slope from a simulate CSV");
  rate->add_option("--csv", rate_o.csv_path, "Records CSV written by simulate")->required();
  rate->add_option("--fit-fraction", rate_o.fit_fraction, "Share of the largest sample sizes used in the fit");
  rate->add_option("--loss-column", rate_o.loss_column, "auto | psi | phi");
  rate->add_option("--aggregate-out", rate_o.aggregate_out, "Write per-n mean and std CSV here");
  rate->add_option("--expect-range", rate_o.expect_range, "lo,hi: exit 1 if the slope falls outside")
      ->delimiter(',')
      ->expected(2);
  rate->add_option("--out", rate_o.out, "Result JSON path (default stdout)");
  add_common(rate, common, false);

  VerifyOptions ver_o;
  auto* ver = app.add_subcommand("verify-polysys", "Check a candidate or run a falsification search");
  ver->add_option("--system", ver_o.system, "asym | sym");
  ver->add_option("--r", ver_o.r, "System order");
  ver->add_option("--pi", ver_o.pi, "Mixing weight (asym only)");
  ver->add_option("--starts", ver_o.starts, "Falsification starts");
  ver->add_option("--tol", ver_o.tol, "Residual tolerance (default 1e-12 candidate, 1e-6 search)");
  ver->add_option("--candidate", ver_o.candidate, "x1,x2,y1,y2,y3")->delimiter(',')->expected(5);
  ver->add_option("--family", ver_o.family, "asym-r5 | sym-r3 | sym-violator | model-s");
  ver->add_option("--family-param", ver_o.family_param, "Free parameter of the family");
  ver->add_option("--expect", ver_o.expect, "auto | solution | no-solution");
  ver->add_option("--out", ver_o.out, "Result JSON path (default stdout)");
  add_common(ver, common, true);

  DistanceOptions dist_o;
  double ta = 0.0, v1a = 1.0, v2a = 1.0, tb = 0.0, v1b = 1.0, v2b = 1.0;
  auto* dist = app.add_subcommand("distance", "Hellinger and total-variation distance, or the scaling probe");
  dist->add_option("--pi", dist_o.pi, "Mixing weight");
  dist->add_option("--theta", ta, "theta of the first point");
  dist->add_option("--v1", v1a, "v1 of the first point");
  dist->add_option("--v2", v2a, "v2 of the first point");
  dist->add_option("--theta-b", tb, "theta of the second point");
  dist->add_option("--v1-b", v1b, "v1 of the second point");
  dist->add_option("--v2-b", v2b, "v2 of the second point");
  dist->add_option("--abs-tol", dist_o.abs_tol, "Quadrature absolute tolerance");
  dist->add_option("--probe", dist_o.probe, "solution | control: run the n * h^2 scaling probe");
  dist->add_option("--probe-r", dist_o.probe_r, "Order r of the probe (eps_n = n^{-1/(2r)})");
  dist->add_option("--probe-n", dist_o.probe_n, "Sample sizes for the probe")->delimiter(',');
  dist->add_option("--out", dist_o.out, "Result JSON path (default stdout)");
  add_common(dist, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (*fit) {
      finish_em(fit_o.em, fit_mode, fit_tb, fit_vb);
      return cmd_fit(fit_o, common);
    }
    if (*sim) {
      if (record_timing) sim_o.record_timing = true;
      return cmd_simulate(sim_o, common);
    }
    if (*rate) return cmd_rate(rate_o, common);
    if (*ver) return cmd_verify_polysys(ver_o, common);
    if (*dist) {
      dist_o.a = {ta, v1a, v2a};
      dist_o.b = {tb, v1b, v2b};
      return cmd_distance(dist_o, common);
    }
  } catch (const CliError& e) {
    std::cerr << "lsmix " << name << ": " << e.what() << '\n';
    return e.code();
  } catch (const DegenerateResponsibilities& e) {
    std::cerr << "lsmix " << name << ": numeric degeneracy: " << e.what() << '\n';
    return kDegenerate;
  } catch (const QuadratureError& e) {
    std::cerr << "lsmix " << name << ": quadrature failed: " << e.what() << '\n';
    return kDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "lsmix " << name << ": " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
