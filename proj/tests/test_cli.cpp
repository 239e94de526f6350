#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "cli_runner.hpp"

using nlohmann::json;
using namespace lsmix::testing;
namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = scratch_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    spit(dir / "tiny.json", kTinySimConfig);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string p(const std::string& name) const { return (dir / name).string(); }

  fs::path dir;
};

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli("").exit_code, 2);
  EXPECT_EQ(run_cli("nonsense").exit_code, 2);
  EXPECT_EQ(run_cli("fit --draws 100").exit_code, 2);
  EXPECT_EQ(run_cli("fit --pi 0.6 --draws 100").exit_code, 2);
  EXPECT_EQ(run_cli("fit --pi 0.3 --data " + p("missing.txt")).exit_code, 2);
  EXPECT_EQ(run_cli("fit --pi 0.3 --draws 100 --data " + p("tiny.json")).exit_code, 2);
  EXPECT_EQ(run_cli("distance --v1 -1").exit_code, 2);
  EXPECT_EQ(run_cli("verify-polysys --system asym --r 4 --pi 0.5 --starts 5").exit_code, 2);
  EXPECT_EQ(run_cli("verify-polysys --system cubic --r 4").exit_code, 2);
  EXPECT_EQ(run_cli("rate --csv " + p("tiny.json")).exit_code, 2);
  spit(dir / "bad.json", R"({"model": "A", "bogus": 1})");
  EXPECT_EQ(run_cli("simulate --config " + p("bad.json")).exit_code, 2);
  spit(dir / "bad.txt", "1.0\nnot-a-number\n");
  EXPECT_EQ(run_cli("fit --pi 0.3 --data " + p("bad.txt")).exit_code, 2);
}

TEST_F(Cli, FailedAssertionsExitOne) {
  EXPECT_EQ(run_cli("verify-polysys --system sym --r 4 --candidate 0,0,0,0,0").exit_code, 1);
  EXPECT_EQ(run_cli("verify-polysys --system sym --r 3 --candidate 0,0,0,0,0 --expect no-solution").exit_code, 0);
  ASSERT_EQ(run_cli("simulate --config " + p("tiny.json") + " --out " + p("s.csv")).exit_code, 0);
  EXPECT_EQ(run_cli("rate --csv " + p("s.csv") + " --expect-range 5,6").exit_code, 1);
}

TEST_F(Cli, DistanceOfIdenticalPointsIsZero) {
  const auto run = run_cli("distance --pi 0.3 --theta 0.5 --v1 1.2 --v2 0.8 --theta-b 0.5 --v1-b 1.2 --v2-b 0.8");
  ASSERT_EQ(run.exit_code, 0);
  const auto j = json::parse(run.out);
  EXPECT_NEAR(j.at("hellinger_sq").get<double>(), 0.0, 1e-15);
  EXPECT_NEAR(j.at("total_variation").get<double>(), 0.0, 1e-15);
}

TEST_F(Cli, VerifyPolysysExamples) {
  const auto r5 = run_cli("verify-polysys --system asym --r 5 --pi 0.25 --family asym-r5");
  ASSERT_EQ(r5.exit_code, 0);
  EXPECT_LE(json::parse(r5.out).at("max_abs_residual").get<double>(), 1e-14);
  const auto r3 = run_cli("verify-polysys --system sym --r 3 --starts 200");
  ASSERT_EQ(r3.exit_code, 0);
  EXPECT_TRUE(json::parse(r3.out).at("found").get<bool>());
}

TEST_F(Cli, SimulateRatePipeline) {
  ASSERT_EQ(run_cli("simulate --config " + p("tiny.json") + " --out " + p("s.csv")).exit_code, 0);
  const std::string csv = slurp(dir / "s.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 13);  // header + 6 n x 2 reps
  ASSERT_TRUE(fs::exists(p("s.csv.manifest.json")));
  const auto manifest = json::parse(slurp(p("s.csv.manifest.json")));
  EXPECT_EQ(manifest.at("seed").get<std::uint64_t>(), 11u);
  EXPECT_EQ(manifest.at("config").at("loss_kind"), "psi");
  EXPECT_EQ(manifest.at("config_digest").get<std::string>().rfind("fnv1a64:", 0), 0u);

  const auto rate = run_cli("rate --csv " + p("s.csv") + " --aggregate-out " + p("agg.csv"));
  ASSERT_EQ(rate.exit_code, 0);
  const auto j = json::parse(rate.out);
  EXPECT_EQ(j.at("points").get<int>(), 3);
  EXPECT_EQ(j.at("loss_column"), "loss_psi");
  EXPECT_TRUE(std::isfinite(j.at("slope").get<double>()));
  const std::string agg = slurp(dir / "agg.csv");
  EXPECT_EQ(agg.rfind("n,count,mean,std\n", 0), 0u);
}

TEST_F(Cli, FitRecoversSimulatedDraws) {
  ASSERT_EQ(run_cli("simulate --draws 10000 --pi 0.3 --theta 2 --v1 1 --v2 1 --seed 4 --out " + p("y.txt")).exit_code,
            0);
  const auto run = run_cli("fit --pi 0.3 --data " + p("y.txt") + " --seed 2");
  ASSERT_EQ(run.exit_code, 0);
  const auto j = json::parse(run.out);
  EXPECT_NEAR(j.at("theta").get<double>(), 2.0, 0.1);
  EXPECT_NEAR(j.at("v1").get<double>(), 1.0, 0.15);
  EXPECT_NEAR(j.at("v2").get<double>(), 1.0, 0.15);
  EXPECT_EQ(j.at("n").get<int>(), 10000);
}

TEST_F(Cli, RerunsAreByteIdentical) {
  ASSERT_EQ(run_cli("simulate --draws 2000 --pi 0.3 --theta 1 --v1 1 --v2 2 --seed 5 --out " + p("y.txt")).exit_code,
            0);
  ASSERT_EQ(run_cli("simulate --config " + p("tiny.json") + " --out " + p("s.csv")).exit_code, 0);
  const std::vector<std::string> commands{
      "simulate --draws 2000 --pi 0.3 --theta 1 --v1 1 --v2 2 --seed 5",
      "simulate --config " + p("tiny.json"),
      "fit --pi 0.3 --data " + p("y.txt") + " --seed 3",
      "rate --csv " + p("s.csv"),
      "verify-polysys --system asym --r 6 --pi 0.25 --starts 40 --seed 2",
      "distance --pi 0.3 --theta 0.5 --v1 1.2 --v2 0.8 --theta-b 0.1 --v1-b 1 --v2-b 1",
  };
  for (const auto& cmd : commands) {
    const auto a = run_cli(cmd);
    const auto b = run_cli(cmd + " --workers 2");
    EXPECT_LE(a.exit_code, 1) << cmd;
    EXPECT_EQ(a.exit_code, b.exit_code) << cmd;
    EXPECT_FALSE(a.out.empty()) << cmd;
    EXPECT_EQ(a.out, b.out) << cmd;
  }
}

TEST_F(Cli, ManifestDigestStableAcrossReruns) {
  const std::string cmd = "verify-polysys --system sym --r 3 --starts 20 --out ";
  ASSERT_EQ(run_cli(cmd + p("a.json")).exit_code, 0);
  ASSERT_EQ(run_cli(cmd + p("b.json")).exit_code, 0);
  const auto ma = json::parse(slurp(p("a.json.manifest.json")));
  const auto mb = json::parse(slurp(p("b.json.manifest.json")));
  EXPECT_EQ(ma.at("config_digest"), mb.at("config_digest"));
  EXPECT_EQ(slurp(p("a.json")), slurp(p("b.json")));
  EXPECT_TRUE(ma.contains("workers"));
  EXPECT_TRUE(ma.contains("wall_time_s"));
}
