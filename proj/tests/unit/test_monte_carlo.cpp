#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "emfsec/monte_carlo.hpp"
#include "emfsec/random_instances.hpp"
#include "test_support.hpp"

using namespace emfsec;
using emfsec::testing::binomial_sigma;

TEST(CounterRng, SameKeySameStream) {
  CounterRng a(5, 9), b(5, 9), c(5, 10), d(6, 9);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
    EXPECT_NE(x, d.next_u64());
    seen.insert(x);
  }
  EXPECT_EQ(seen.size(), 100u);
}

TEST(CounterRng, UniformStaysInOpenInterval) {
  CounterRng rng(1, 1);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / 100000));
}

TEST(SampleChannel, IdentityCovarianceHasUnitPowerPerEntry) {
  CounterRng rng(2, 0);
  const auto cov = HermitianMatrix::identity(2);
  constexpr int kN = 1000000;
  double total = 0.0;
  cdouble cross = 0.0;
  for (int i = 0; i < kN; ++i) {
    const auto h = sample_channel(cov, rng);
    total += h.squaredNorm();
    cross += h(0) * std::conj(h(1));
  }
  EXPECT_NEAR(total / kN, 2.0, 0.01);
  EXPECT_NEAR(std::abs(cross) / kN, 0.0, 0.01);
}

TEST(SampleChannel, ZeroAndRankDeficientCovariances) {
  CounterRng rng(3, 0);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(sample_channel(HermitianMatrix::zero(2), rng).squaredNorm(), 0.0);
    const auto h = sample_channel(HermitianMatrix::diagonal({1.0, 0.0}), rng);
    EXPECT_EQ(h(1), cdouble(0.0, 0.0));
  }
}

TEST(NormalSource, AntitheticPairsShareAngles) {
  NormalSource src(4, 0, true);
  ComplexVector a(3), b(3);
  src.next(a);
  src.next(b);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(std::arg(a(i)), std::arg(b(i)), 1e-12);
    const double ua = std::exp(-0.5 * std::norm(a(i)));
    const double ub = std::exp(-0.5 * std::norm(b(i)));
    EXPECT_NEAR(ua + ub, 1.0, 1e-12);
  }
}

TEST(EmpiricalSop, SilentTransmitterNeverLeaks) {
  const auto ch = ChannelModel::isotropic(ComplexMatrix::Ones(1, 2));
  const auto cov = CovarianceSet::zero(ch.dims());
  SampleSpec s;
  s.n_samples = 10000;
  EXPECT_EQ(empirical_sop(ch, cov, s).estimate, 1.0);
  EXPECT_EQ(empirical_exposure(ch, cov, 1e-12, s).estimate, 1.0);
}

TEST(EmpiricalSop, IndependentOfThreadCount) {
  CounterRng rng(5, 0);
  const auto ch = random_channel(rng);
  const auto cov = random_covariances(rng);
  SampleSpec s;
  s.n_samples = 300000;
  s.seed = 17;
  s.threads = 1;
  const auto a = empirical_sop(ch, cov, s);
  const auto ea = empirical_exposure(ch, cov, 2.0, s);
  s.threads = 3;
  const auto b = empirical_sop(ch, cov, s);
  const auto eb = empirical_exposure(ch, cov, 2.0, s);
  EXPECT_EQ(a.successes, b.successes);
  EXPECT_EQ(ea.successes, eb.successes);
  s.seed = 18;
  EXPECT_NE(empirical_sop(ch, cov, s).successes, a.successes);
}

TEST(EmpiricalSop, ClosedFormsWithinFourSigmaOnMostInstances) {
  CounterRng rng(6, 0);
  int inside_sop = 0, inside_exp = 0;
  constexpr int kInstances = 100;
  for (int t = 0; t < kInstances; ++t) {
    const auto ch = random_channel(rng);
    const auto cov = random_covariances(rng);
    SampleSpec s;
    s.n_samples = 100000;
    s.seed = 100 + static_cast<std::uint64_t>(t);
    s.antithetic = (t % 2) == 1;
    const double p = secrecy_outage_prob(ch, cov);
    if (std::abs(empirical_sop(ch, cov, s).estimate - p) <= 4.0 * binomial_sigma(p, s.n_samples)) ++inside_sop;
    const double e = exposure_outage_prob(ch, cov, 2.0);
    if (std::abs(empirical_exposure(ch, cov, 2.0, s).estimate - e) <= 4.0 * binomial_sigma(e, s.n_samples)) {
      ++inside_exp;
    }
  }
  EXPECT_GE(inside_sop, 99);
  EXPECT_GE(inside_exp, 99);
}

TEST(EmpiricalTail, ExponentialReference) {
  SpectralProfile p;
  p.lambdas = {1.0};
  p.mults = {1};
  SampleSpec s;
  s.n_samples = 200000;
  s.seed = 7;
  const auto est = empirical_tail(p, {0.5, 1.0, 3.0}, s);
  for (std::size_t i = 0; i < 3; ++i) {
    const double z = std::vector<double>{0.5, 1.0, 3.0}[i];
    EXPECT_NEAR(est[i].estimate, std::exp(-z), 4.0 * binomial_sigma(std::exp(-z), s.n_samples));
  }
  s.threads = 1;
  const auto one = empirical_tail(p, {1.0}, s);
  s.threads = 4;
  EXPECT_EQ(empirical_tail(p, {1.0}, s)[0].successes, one[0].successes);
}

TEST(EavesdropperRates, QuantileMatchesThreshold) {
  CounterRng rng(8, 0);
  const auto ch = random_channel(rng);
  auto cov = random_covariances(rng);
  SampleSpec s;
  s.n_samples = 100000;
  const auto rates = sample_eavesdropper_rates(ch, cov, s);
  ASSERT_EQ(rates.size(), s.n_samples);
  cov.r_e_max = rate_threshold_for_outage(ch, cov, 0.05);
  std::size_t below = 0;
  for (double r : rates) below += r <= cov.r_e_max;
  const double frac = static_cast<double>(below) / static_cast<double>(s.n_samples);
  EXPECT_NEAR(frac, 0.95, 4.0 * binomial_sigma(0.95, s.n_samples));
}
