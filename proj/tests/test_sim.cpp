#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "lsmix/sim.hpp"

using namespace lsmix;

namespace {

std::vector<ExperimentRecord> power_law_records(double scale, double exponent, std::vector<std::size_t> ns) {
  std::vector<ExperimentRecord> out;
  for (std::size_t n : ns) {
    for (std::size_t rep = 0; rep < 3; ++rep) {
      ExperimentRecord r;
      r.n = n;
      r.replication = rep;
      // Replications straddle the power law symmetrically so the mean sits on it.
      const double base = scale * std::pow(static_cast<double>(n), exponent);
      r.loss_psi = base * (1.0 + 0.1 * (static_cast<double>(rep) - 1.0));
      r.loss_phi = 0.5 * base;
      out.push_back(r);
    }
  }
  return out;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.n_values = {200, 400, 800};
  cfg.replications = 2;
  cfg.em.n_restarts = 2;
  cfg.em.max_iters = 200;
  cfg.base_seed = 17;
  return cfg;
}

}  // namespace

TEST(ModelPath, ParamsAtExamples) {
  const auto s = params_at(ModelPath::model_s(), 256);
  EXPECT_NEAR(s.theta, 0.25, 1e-15);
  EXPECT_NEAR(s.v1, 1.875, 1e-15);
  EXPECT_NEAR(s.v2, 0.75, 1e-15);

  const auto sp = params_at(ModelPath::model_s_prime(), 10000);
  EXPECT_NEAR(sp.theta, std::sqrt(0.1), 1e-15);
  EXPECT_NEAR(sp.v1, 1.0 + 0.1 / 3.0, 1e-15);
  EXPECT_NEAR(sp.v2, 1.0 + 0.1 / 6.0, 1e-15);

  const auto a = params_at(ModelPath::model_a(0.25), 4096);
  EXPECT_EQ(a.theta, 0.0);
  EXPECT_NEAR(a.v1, 0.925, 1e-15);
  EXPECT_NEAR(a.v2, 0.975, 1e-15);

  const auto half = ModelPath::model_a(0.5);
  EXPECT_EQ(half.solution, (PolyCandidate{0.0, 0.0, -0.1, 0.1, -0.1}));
  EXPECT_THROW(params_at(ModelPath::model_s(), 0), std::invalid_argument);
  EXPECT_THROW(params_at(ModelPath::model_a(0.1, 100.0), 2), DomainError);
}

TEST(ModelPath, ParameterGapShrinksWithN) {
  for (const auto& path : {ModelPath::model_a(0.1), ModelPath::model_a(0.4), ModelPath::model_s(),
                           ModelPath::model_s_prime()}) {
    const MixtureParams limit{0.0, path.v0, path.v0};
    double prev = INFINITY;
    for (std::size_t n : log_spaced_sizes(100, 1000000, 9)) {
      const double d = psi_r(params_at(path, n), limit, LossOrder(4.0));
      EXPECT_LT(d, prev);
      prev = d;
    }
  }
}

TEST(PathKind, RoundTrip) {
  for (auto k : {PathKind::A, PathKind::S, PathKind::S_prime}) EXPECT_EQ(parse_path_kind(to_string(k)), k);
  for (auto k : {LossKind::psi, LossKind::phi}) EXPECT_EQ(parse_loss_kind(to_string(k)), k);
  EXPECT_THROW(parse_path_kind("B"), std::invalid_argument);
  EXPECT_THROW(parse_loss_kind("l2"), std::invalid_argument);
}

TEST(InitDraws, WindowAndClamp) {
  const MixtureParams truth{0.3, 1.0, 2.0};
  const auto draws = init_draws(truth, 10000, 500, 9);
  ASSERT_EQ(draws.size(), 500u);
  const double ht = 0.517947467923121, hv = 0.268269579527973;  // 1e4^{-1/14}, 1e4^{-1/7}
  double max_t = 0.0, max_v = 0.0;
  for (const auto& d : draws) {
    max_t = std::max(max_t, std::abs(d.theta - truth.theta));
    max_v = std::max({max_v, std::abs(d.v1 - truth.v1), std::abs(d.v2 - truth.v2)});
  }
  EXPECT_LE(max_t, ht);
  EXPECT_LE(max_v, hv);
  EXPECT_GT(max_t, 0.95 * ht);
  EXPECT_GT(max_v, 0.95 * hv);
  EXPECT_EQ(draws, init_draws(truth, 10000, 500, 9));
  // A larger k extends the list without changing its prefix.
  const auto more = init_draws(truth, 10000, 600, 9);
  EXPECT_TRUE(std::equal(draws.begin(), draws.end(), more.begin()));

  ParamSpace space;
  for (const auto& d : init_draws({0.0, 0.011, 0.02}, 10, 200, 3, space)) {
    EXPECT_TRUE(space.contains(d));
  }
  EXPECT_THROW(init_draws(truth, 100, 0, 1), std::invalid_argument);
}

TEST(LogSpacedSizes, StrictlyIncreasingWithEndpoints) {
  const auto g = log_spaced_sizes(1000, 100000, 100);
  ASSERT_EQ(g.size(), 100u);
  EXPECT_EQ(g.front(), 1000u);
  EXPECT_EQ(g.back(), 100000u);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
  const auto dense = log_spaced_sizes(1, 5, 10);
  for (std::size_t i = 1; i < dense.size(); ++i) EXPECT_GT(dense[i], dense[i - 1]);
  EXPECT_THROW(log_spaced_sizes(0, 10, 3), std::invalid_argument);
  EXPECT_THROW(log_spaced_sizes(10, 5, 3), std::invalid_argument);
}

TEST(EstimateRate, RecoversExactPowerLaw) {
  const auto recs = power_law_records(3.0, -0.125, log_spaced_sizes(1000, 100000, 10));
  const auto r = estimate_rate(recs, 1.0);
  EXPECT_NEAR(r.slope, -0.125, 1e-10);
  EXPECT_NEAR(r.intercept, std::log(3.0), 1e-9);
  EXPECT_NEAR(r.stderr_slope, 0.0, 1e-9);
  EXPECT_EQ(r.points, 10u);

  const auto tail = estimate_rate(power_law_records(1.0, -1.0 / 12.0, log_spaced_sizes(1000, 100000, 10)), 0.5,
                                  LossKind::phi);
  EXPECT_NEAR(tail.slope, -1.0 / 12.0, 1e-10);
  EXPECT_NEAR(tail.intercept, std::log(0.5), 1e-9);
  EXPECT_EQ(tail.points, 5u);
  EXPECT_EQ(tail.n_max, 100000u);
}

TEST(EstimateRate, Errors) {
  const auto recs = power_law_records(1.0, -0.5, {100, 200, 400, 800});
  EXPECT_THROW(estimate_rate(recs, 0.5), std::invalid_argument);  // only 2 points kept
  EXPECT_NO_THROW(estimate_rate(recs, 0.75));
  EXPECT_THROW(estimate_rate(recs, 0.0), std::invalid_argument);
  EXPECT_THROW(estimate_rate(recs, 1.5), std::invalid_argument);
  auto zero = recs;
  for (auto& r : zero) r.loss_psi = 0.0;
  EXPECT_THROW(estimate_rate(zero, 1.0), std::domain_error);
}

TEST(SummarizeByN, MeanAndStd) {
  const auto s = summarize_by_n(power_law_records(2.0, 0.0, {10, 20}), LossKind::psi);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].count, 3u);
  EXPECT_NEAR(s[0].mean, 2.0, 1e-15);
  EXPECT_NEAR(s[0].stddev, 0.2, 1e-15);
}

TEST(Csv, RoundTripIsExact) {
  auto recs = run_experiment(ModelPath::model_a(0.25), small_config());
  recs[0].wall_time_ms = 1.0 / 3.0;
  recs[1].loss_psi = 5e-300;
  std::stringstream ss;
  write_records_csv(ss, recs);
  const auto back = read_records_csv(ss);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].n, recs[i].n);
    EXPECT_EQ(back[i].replication, recs[i].replication);
    EXPECT_EQ(back[i].loss_psi, recs[i].loss_psi);
    EXPECT_EQ(back[i].loss_phi, recs[i].loss_phi);
    EXPECT_EQ(back[i].theta_hat, recs[i].theta_hat);
    EXPECT_EQ(back[i].v1_hat, recs[i].v1_hat);
    EXPECT_EQ(back[i].v2_hat, recs[i].v2_hat);
    EXPECT_EQ(back[i].loglik, recs[i].loglik);
    EXPECT_EQ(back[i].iterations, recs[i].iterations);
    EXPECT_EQ(back[i].converged, recs[i].converged);
    EXPECT_EQ(back[i].wall_time_ms, recs[i].wall_time_ms);
  }
}

TEST(Csv, RejectsMalformedInput) {
  const std::string header(kRecordCsvHeader);
  auto parse = [](const std::string& s) {
    std::istringstream is(s);
    return read_records_csv(is);
  };
  EXPECT_THROW(parse(""), CsvFormatError);
  EXPECT_THROW(parse("n,rep\n"), CsvFormatError);
  EXPECT_THROW(parse(header + "\n1,0,0.1,0.1,0,1,1,-3,4,1\n"), CsvFormatError);
  EXPECT_THROW(parse(header + "\n1,0,abc,0.1,0,1,1,-3,4,1,0\n"), CsvFormatError);
  EXPECT_THROW(parse(header + "\n1.5,0,0.1,0.1,0,1,1,-3,4,1,0\n"), CsvFormatError);
  EXPECT_EQ(parse(header + "\r\n\n1,0,0.1,0.1,0,1,1,-3,4,1,0\r\n").size(), 1u);
}

TEST(RunExperiment, DeterministicAndWorkerIndependent) {
  auto cfg = small_config();
  const auto a = run_experiment(ModelPath::model_a(0.25), cfg);
  cfg.workers = 3;
  const auto b = run_experiment(ModelPath::model_a(0.25), cfg);
  ASSERT_EQ(a.size(), 6u);
  std::stringstream sa, sb;
  write_records_csv(sa, a);
  write_records_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].n, cfg.n_values[i / 2]);
    EXPECT_EQ(a[i].replication, i % 2);
    EXPECT_EQ(a[i].wall_time_ms, 0.0);
    EXPECT_GE(a[i].loss_psi, a[i].loss_phi);
  }
  cfg.base_seed = 18;
  const auto c = run_experiment(ModelPath::model_a(0.25), cfg);
  EXPECT_NE(a[0].theta_hat, c[0].theta_hat);
}

TEST(RunExperiment, RecordTimingFillsWallTime) {
  auto cfg = small_config();
  cfg.n_values = {200};
  cfg.record_timing = true;
  for (const auto& r : run_experiment(ModelPath::model_s(), cfg)) EXPECT_GT(r.wall_time_ms, 0.0);
}

TEST(ExperimentConfig, Validation) {
  ExperimentConfig cfg;
  EXPECT_EQ(cfg.n_values.size(), 100u);
  EXPECT_EQ(cfg.replications, 10u);
  EXPECT_NO_THROW(cfg.validate());
  cfg.replications = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.n_values.clear();
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.loss_order = 0.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
