#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "lsmix/distances.hpp"
#include "lsmix/model.hpp"
#include "lsmix/rng.hpp"

using namespace lsmix;

namespace {

constexpr double kInvSqrtTwoPi = 0.3989422804014327;

// Long-double re-derivation of the mixture density, independent of the library code path.
long double mixture_pdf_ld(long double x, long double theta, long double v1, long double v2, long double pi) {
  const long double two_pi = 6.283185307179586476925286766559L;
  const long double c = pi / (1.0L - pi);
  auto n = [&](long double m, long double v) { return std::exp(-(x - m) * (x - m) / (2.0L * v)) / std::sqrt(two_pi * v); };
  return pi * n(-theta, v1) + (1.0L - pi) * n(c * theta, v2);
}

}  // namespace

TEST(MixingConfig, AcceptsHalfOpenInterval) {
  EXPECT_NO_THROW(MixingConfig(0.5));
  EXPECT_NO_THROW(MixingConfig(1e-6));
  EXPECT_THROW(MixingConfig(0.0), DomainError);
  EXPECT_THROW(MixingConfig(0.6), DomainError);
  EXPECT_THROW(MixingConfig(-0.1), DomainError);
  EXPECT_THROW(MixingConfig(std::nan("")), DomainError);
}

TEST(MixingConfig, RatioIsDerivedFromPi) {
  for (double pi : {0.1, 0.25, 0.3, 0.4, 0.5}) {
    const MixingConfig mix(pi);
    EXPECT_EQ(mix.c(), pi / (1.0 - pi));
    EXPECT_EQ(mix.symmetric(), pi == 0.5);
  }
}

TEST(MixtureParams, MeanIsZero) {
  for (double pi : {0.1, 0.25, 0.3, 0.4, 0.5}) {
    const MixingConfig mix(pi);
    for (double theta : {-7.0, -0.3, 0.0, 1.0, 2.5, 9.9}) {
      const MixtureParams p{theta, 1.0, 2.0};
      EXPECT_NEAR(pi * p.mean_first(mix) + (1.0 - pi) * p.mean_second(mix), 0.0, 1e-15 * std::max(1.0, std::abs(theta)));
    }
  }
}

TEST(MixtureParams, Validation) {
  EXPECT_TRUE((MixtureParams{0.0, 1.0, 1.0}.valid()));
  EXPECT_FALSE((MixtureParams{0.0, 0.0, 1.0}.valid()));
  EXPECT_FALSE((MixtureParams{0.0, 1.0, -1.0}.valid()));
  EXPECT_FALSE((MixtureParams{std::nan(""), 1.0, 1.0}.valid()));
  EXPECT_THROW((MixtureParams{0.0, -1.0, 1.0}.validate()), DomainError);
}

TEST(ParamSpace, DefaultsAndClamp) {
  const ParamSpace h;
  EXPECT_EQ(h.theta_min, -10.0);
  EXPECT_EQ(h.theta_max, 10.0);
  EXPECT_EQ(h.v_min, 0.01);
  EXPECT_EQ(h.v_max, 100.0);
  EXPECT_NO_THROW(h.validate());
  EXPECT_THROW((ParamSpace{0.0, 1.0, 0.1, 1.0}.validate()), DomainError);
  EXPECT_THROW((ParamSpace{-1.0, 1.0, 0.0, 1.0}.validate()), DomainError);
  EXPECT_THROW((ParamSpace{-1.0, 1.0, 2.0, 1.0}.validate()), DomainError);
  const auto c = h.clamp({12.0, 0.001, 500.0});
  EXPECT_EQ(c, (MixtureParams{10.0, 0.01, 100.0}));
  EXPECT_TRUE(h.contains(c));
  EXPECT_FALSE(h.contains({0.0, 0.001, 1.0}));
}

TEST(GaussianPdf, KnownValues) {
  EXPECT_NEAR(gaussian_pdf(0.0, 0.0, 1.0), kInvSqrtTwoPi, 1e-16);
  EXPECT_NEAR(gaussian_pdf(3.0, 3.0, 4.0), 0.19947114020071635, 1e-16);
  // 50-digit evaluation of the closed form.
  EXPECT_NEAR(gaussian_pdf(1.5, 0.0, 2.0), 0.16073276729880183226, 2e-16);
  EXPECT_THROW(gaussian_pdf(0.0, 0.0, 0.0), DomainError);
  EXPECT_THROW(gaussian_pdf(0.0, 0.0, -2.0), DomainError);
}

TEST(GaussianPdf, IntegratesToOne) {
  for (double v : {0.01, 1.0, 30.0}) {
    const double w = 12.0 * std::sqrt(v);
    const double mass = adaptive_simpson([&](double x) { return gaussian_pdf(x, 0.7, v); }, 0.7 - w, 0.7 + w, 1e-12, 100000);
    EXPECT_NEAR(mass, 1.0, 1e-10) << "v=" << v;
  }
}

TEST(MixturePdf, KnownValues) {
  EXPECT_NEAR(mixture_pdf(0.0, {0.0, 1.0, 1.0}, MixingConfig(0.5)), kInvSqrtTwoPi, 1e-16);
  // 0.3 N(0; 0, 1) + 0.7 N(0; 0, 4) at 50 digits.
  EXPECT_NEAR(mixture_pdf(0.0, {0.0, 1.0, 4.0}, MixingConfig(0.3)), 0.25931248226093124066, 1e-16);
}

TEST(MixturePdf, EqualsWeightedComponents) {
  const MixingConfig mix(0.3);
  const MixtureParams p{1.2, 0.7, 2.5};
  for (double x = -6.0; x <= 6.0; x += 0.37) {
    const double expected = 0.3 * gaussian_pdf(x, -1.2, 0.7) + 0.7 * gaussian_pdf(x, mix.c() * 1.2, 2.5);
    EXPECT_NEAR(mixture_pdf(x, p, mix), expected, 1e-16);
    EXPECT_NEAR(static_cast<double>(mixture_pdf_ld(x, 1.2, 0.7, 2.5, 0.3)), expected, 1e-15);
  }
}

TEST(MixturePdf, NormalisedOnWideInterval) {
  const MixingConfig mix(0.25);
  const double mass =
      adaptive_simpson([&](double x) { return mixture_pdf(x, {1.0, 0.5, 2.0}, mix); }, -50.0, 50.0, 1e-12, 100000);
  EXPECT_NEAR(mass, 1.0, 1e-10);
}

TEST(MixturePdf, NormalisedOverDistanceWindow) {
  for (double pi : {0.1, 0.25, 0.5}) {
    for (const MixtureParams p : {MixtureParams{0.0, 1.0, 1.0}, MixtureParams{2.0, 0.3, 5.0}, MixtureParams{-4.0, 9.0, 0.05}}) {
      const double mass = mixture_mass(p, MixingConfig(pi));
      EXPECT_GE(mass, 1.0 - 1e-9);
      EXPECT_LE(mass, 1.0 + 1e-9);
    }
  }
}

TEST(MixtureLogPdf, StableInTails) {
  const MixingConfig mix(0.3);
  const MixtureParams p{1.0, 0.5, 2.0};
  for (double x : {-3.0, 0.0, 2.0}) EXPECT_NEAR(mixture_log_pdf(x, p, mix), std::log(mixture_pdf(x, p, mix)), 1e-13);
  const double far = mixture_log_pdf(80.0, p, mix);
  EXPECT_TRUE(std::isfinite(far));
  // Only the wide component matters this far out.
  EXPECT_NEAR(far, std::log(0.7) + gaussian_log_pdf(80.0, mix.c() * 1.0, 2.0), 1e-9);
}

TEST(MixtureCdf, LimitsAndDerivative) {
  const MixingConfig mix(0.25);
  const MixtureParams p{1.0, 0.5, 2.0};
  EXPECT_NEAR(mixture_cdf(-60.0, p, mix), 0.0, 1e-15);
  EXPECT_NEAR(mixture_cdf(60.0, p, mix), 1.0, 1e-15);
  for (double x = -4.0; x <= 4.0; x += 0.5) {
    const double h = 1e-5;
    const double fd = (mixture_cdf(x + h, p, mix) - mixture_cdf(x - h, p, mix)) / (2 * h);
    EXPECT_NEAR(fd, mixture_pdf(x, p, mix), 1e-8);
  }
}

TEST(Sample, DeterministicGivenSeed) {
  const MixingConfig mix(0.3);
  const MixtureParams p{1.0, 1.0, 2.0};
  const auto a = sample(1000, p, mix, 42);
  const auto b = sample(1000, p, mix, 42);
  const auto c = sample(1000, p, mix, 43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  // A prefix does not depend on how many draws follow.
  const auto short_run = sample(10, p, mix, 42);
  EXPECT_TRUE(std::equal(short_run.begin(), short_run.end(), a.begin()));
}

TEST(Sample, EmptyIsAnError) {
  EXPECT_THROW(sample(0, {0.0, 1.0, 1.0}, MixingConfig(0.5), 1), EmptySampleError);
  EXPECT_THROW(sample(5, {0.0, -1.0, 1.0}, MixingConfig(0.5), 1), DomainError);
}

TEST(Sample, MeanWithinCltBound) {
  const auto s = sample(1000000, {0.0, 1.0, 1.0}, MixingConfig(0.5), 7);
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  EXPECT_LT(std::abs(mean), 5.0 / 1000.0);
}

TEST(Sample, ZeroMeanForAsymmetricParams) {
  const MixingConfig mix(0.25);
  const MixtureParams p{2.0, 0.5, 3.0};
  const auto s = sample(1000000, p, mix, 11);
  const double n = static_cast<double>(s.size());
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
  // Var = pi (theta^2 + v1) + (1 - pi)(c^2 theta^2 + v2).
  const double c = mix.c();
  const double var = 0.25 * (4.0 + 0.5) + 0.75 * (c * c * 4.0 + 3.0);
  EXPECT_LT(std::abs(mean), 5.0 * std::sqrt(var / n));
}

TEST(Sample, LabelFrequency) {
  const auto s = sample_labeled(1000000, {2.0, 1.0, 1.0}, MixingConfig(0.5), 3);
  const double freq = static_cast<double>(std::count(s.from_first.begin(), s.from_first.end(), true)) / 1e6;
  EXPECT_NEAR(freq, 0.5, 5e-3);
}

TEST(Sample, KolmogorovSmirnovAgainstCdf) {
  const MixingConfig mix(0.3);
  const MixtureParams p{1.5, 0.6, 2.0};
  auto s = sample(100000, p, mix, 2024);
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = mixture_cdf(s[i], p, mix);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  EXPECT_LE(d, 0.01);
}

TEST(LogLikelihood, SinglePointAndAdditivity) {
  const MixingConfig half(0.5);
  const std::vector<double> one{0.0};
  EXPECT_NEAR(log_likelihood(one, {0.0, 1.0, 1.0}, half), std::log(kInvSqrtTwoPi), 1e-15);

  const MixingConfig mix(0.3);
  const MixtureParams p{1.0, 1.0, 2.0};
  const auto a = sample(300, p, mix, 5);
  const auto b = sample(200, p, mix, 6);
  std::vector<double> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  EXPECT_NEAR(log_likelihood(ab, p, mix), log_likelihood(a, p, mix) + log_likelihood(b, p, mix), 1e-10);
  EXPECT_THROW(log_likelihood(std::vector<double>{}, p, mix), EmptySampleError);
}

TEST(LogLikelihood, MatchesExtendedPrecisionOracle) {
  const MixingConfig mix(0.3);
  const MixtureParams p{1.0, 1.0, 2.0};
  const auto s = sample(100, p, mix, 99);
  long double oracle = 0.0L;
  for (const double y : s) oracle += std::log(mixture_pdf_ld(y, 1.0L, 1.0L, 2.0L, 0.3L));
  const double got = log_likelihood(s, p, mix);
  EXPECT_NEAR(got, static_cast<double>(oracle), 1e-10 * std::abs(static_cast<double>(oracle)));
}

TEST(Hermite, Coefficients) {
  EXPECT_EQ(hermite_coefficients(0), (std::vector<double>{1}));
  EXPECT_EQ(hermite_coefficients(2), (std::vector<double>{-1, 0, 1}));
  EXPECT_EQ(hermite_coefficients(4), (std::vector<double>{3, 0, -6, 0, 1}));
  EXPECT_DOUBLE_EQ(hermite_he(3, 2.0), 8.0 - 6.0);
}

TEST(GaussianPartials, ZeroOrderIsPdf) {
  for (double x : {-2.0, 0.1, 3.3}) {
    EXPECT_DOUBLE_EQ(gaussian_partials(x, 0.4, 1.7, 0, 0), gaussian_pdf(x, 0.4, 1.7));
  }
}

TEST(GaussianPartials, HeatEquationAtPoint) {
  const double lhs = gaussian_partials(0.7, -0.2, 1.3, 2, 0);
  const double rhs = 2.0 * gaussian_partials(0.7, -0.2, 1.3, 0, 1);
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(GaussianPartials, FirstThetaDerivativeByFiniteDifference) {
  const double h = 1e-5;
  const double fd = (gaussian_pdf(0.5, h, 1.0) - gaussian_pdf(0.5, -h, 1.0)) / (2 * h);
  EXPECT_NEAR(gaussian_partials(0.5, 0.0, 1.0, 1, 0), fd, 1e-6);
}

TEST(GaussianPartials, HigherOrderPdeIdentities) {
  // Iterating the heat equation: d^4/dtheta^4 = 4 d^2/dv^2 and d^4/dtheta^2 dv... = 2 d^2/dv^2 etc.
  for (double x : {-1.3, 0.0, 0.8, 2.9}) {
    for (double v : {0.4, 1.0, 2.2}) {
      const double t4 = gaussian_partials(x, 0.3, v, 4, 0);
      const double t2v1 = gaussian_partials(x, 0.3, v, 2, 1);
      const double v2 = gaussian_partials(x, 0.3, v, 0, 2);
      EXPECT_NEAR(t4, 2.0 * t2v1, 1e-12);
      EXPECT_NEAR(t2v1, 2.0 * v2, 1e-12);
      const double t3 = gaussian_partials(x, 0.3, v, 3, 0);
      const double t1v1 = gaussian_partials(x, 0.3, v, 1, 1);
      EXPECT_NEAR(t3, 2.0 * t1v1, 1e-12);
    }
  }
}

TEST(GaussianPartials, UnsupportedOrdersThrow) {
  EXPECT_THROW(gaussian_partials(0.0, 0.0, 1.0, 5, 0), std::out_of_range);
  EXPECT_THROW(gaussian_partials(0.0, 0.0, 1.0, 0, 3), std::out_of_range);
  EXPECT_THROW(gaussian_partials(0.0, 0.0, 1.0, -1, 0), std::out_of_range);
  EXPECT_THROW(gaussian_partials(0.0, 0.0, 0.0, 1, 0), DomainError);
}

TEST(GaussianPartials, VarianceDerivativesByFiniteDifference) {
  const double h = 1e-4;
  for (double x : {-1.0, 0.3, 2.0}) {
    const double v = 1.4;
    const double fd1 = (gaussian_pdf(x, 0.2, v + h) - gaussian_pdf(x, 0.2, v - h)) / (2 * h);
    const double fd2 =
        (gaussian_pdf(x, 0.2, v + h) - 2 * gaussian_pdf(x, 0.2, v) + gaussian_pdf(x, 0.2, v - h)) / (h * h);
    EXPECT_NEAR(gaussian_partials(x, 0.2, v, 0, 1), fd1, 1e-8);
    EXPECT_NEAR(gaussian_partials(x, 0.2, v, 0, 2), fd2, 1e-5);
  }
}

TEST(Rng, UniformOpenIntervalAndQuantiles) {
  EXPECT_GT(SplitMix64::to_open_unit(0), 0.0);
  EXPECT_LT(SplitMix64::to_open_unit(~0ULL), 1.0);
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-13);
  EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-15);
  EXPECT_NEAR(normal_quantile(1e-10), -6.361340902404056, 1e-9);
  SplitMix64 a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
  EXPECT_NE(derive_seed(0, 0), derive_seed(0, 1));
}
