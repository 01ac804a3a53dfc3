#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lansing/kernel.hpp"
#include "oracles.hpp"

using namespace lansing;

TEST(DrawMutation, StaysInSupport) {
  Rng rng(1);
  for (double u : {0.0, 0.3, 1.0, 2.5}) {
    for (double sigma : {0.05, 0.5, 3.0}) {
      for (int i = 0; i < 5000; ++i) {
        const double y = draw_mutation(u, sigma, rng);
        ASSERT_GE(y, std::max(0.0, u - 1.0));
        ASSERT_LE(y, u + 1.0);
      }
    }
  }
  EXPECT_THROW((void)draw_mutation(-0.1, 0.1, rng), DomainError);
  EXPECT_THROW((void)draw_mutation(1.0, 0.0, rng), DomainError);
}

TEST(DrawMutation, SymmetricAwayFromBoundary) {
  Rng rng(2);
  std::vector<double> v, mirrored;
  for (int i = 0; i < 4000; ++i) v.push_back(draw_mutation(2.0, 0.8, rng) - 2.0);
  for (int i = 0; i < 4000; ++i) mirrored.push_back(2.0 - draw_mutation(2.0, 0.8, rng));
  EXPECT_LT(oracle::ks_two_sample(v, mirrored), oracle::ks_two_sample_critical(4000, 4000, 0.01));
}

TEST(DrawMutation, MatchesTruncatedGaussianCdf) {
  // u = 0.4: support [0, 1.4], density proportional to exp(-(y-u)^2/sigma^2).
  const double u = 0.4, sigma = 0.7, sd = sigma / std::sqrt(2.0);
  auto phi = [&](double y) { return 0.5 * std::erfc(-(y - u) / (sd * std::sqrt(2.0))); };
  const double lo = phi(0.0), hi = phi(1.4);
  Rng rng(3);
  std::vector<double> ys;
  for (int i = 0; i < 10000; ++i) ys.push_back(draw_mutation(u, sigma, rng));
  const double d = oracle::ks_one_sample(ys, [&](double y) { return (phi(y) - lo) / (hi - lo); });
  EXPECT_LT(d, oracle::ks_one_sample_critical(ys.size(), 0.01));
}

TEST(DrawMutation, DegeneratesAsSigmaShrinks) {
  Rng rng(4);
  double prev = 1e9;
  for (double sigma : {0.5, 0.05, 0.005}) {
    double s2 = 0.0;
    for (int i = 0; i < 4000; ++i) {
      const double v = draw_mutation(2.0, sigma, rng) - 2.0;
      s2 += v * v;
    }
    s2 /= 4000;
    EXPECT_NEAR(s2, sigma * sigma / 2.0, 0.1 * sigma * sigma);
    EXPECT_LT(s2, prev);
    prev = s2;
  }
}

TEST(DrawMutation, ScriptVariantNonnegative) {
  Rng rng(5);
  for (int i = 0; i < 5000; ++i) ASSERT_GE(draw_mutation_script(0.01, 0.5, rng), 0.0);
}

TEST(SymmetricKernel, NormalisedAndMoments) {
  for (double sigma : {0.05, 0.1, 0.5, 1.0, 4.0}) {
    const SymmetricKernel k(sigma);
    auto dens = [&](double h) { return k.density(h); };
    EXPECT_NEAR(oracle::simpson(dens, -1.0, 1.0, 1e-13), 1.0, 1e-10) << sigma;
    for (double u : {0.0, 0.01, 0.3, 0.7, 1.0}) {
      const double m1 = oracle::simpson([&](double h) { return h * dens(h); }, 0.0, u, 1e-14);
      const double m2 = oracle::simpson([&](double h) { return h * h * dens(h); }, 0.0, u, 1e-14);
      EXPECT_NEAR(k.first_moment_to(u), m1, 1e-11) << sigma << " " << u;
      EXPECT_NEAR(k.second_moment_to(u), m2, 1e-11) << sigma << " " << u;
      const double upper = oracle::simpson([&](double h) { return h * dens(h); }, u, 1.0, 1e-14);
      EXPECT_NEAR(k.drift_factor(u), m2 + u * upper, 1e-11);
    }
  }
}

TEST(SymmetricKernel, DriftFactorStrictlyIncreasing) {
  for (double sigma : {0.05, 0.3, 2.0}) {
    const SymmetricKernel k(sigma);
    EXPECT_EQ(k.drift_factor(0.0), 0.0);
    // Derivative in u is \int_u^1 h k(h) dh > 0; increments below round-off
    // are only required to stay within a few ulps.
    double prev = 0.0;
    for (int i = 1; i <= 1000; ++i) {
      const double u = i / 1000.0;
      const double f = k.drift_factor(u);
      const double slope = k.first_moment_to(1.0) - k.first_moment_to(u);
      if (slope * 1e-3 > 1e-13 * f) {
        EXPECT_GT(f, prev) << sigma << " " << u;
      } else {
        EXPECT_GE(f, prev * (1.0 - 1e-14)) << sigma << " " << u;
      }
      prev = f;
    }
  }
}

TEST(SymmetricKernel, SamplesFollowDensity) {
  const SymmetricKernel k(0.6);
  Rng rng(6);
  std::vector<double> hs, pos;
  for (int i = 0; i < 10000; ++i) hs.push_back(k.sample(rng));
  for (int i = 0; i < 10000; ++i) pos.push_back(k.sample_positive(rng));
  auto cdf = [&](double x) {
    return oracle::simpson([&](double h) { return k.density(h); }, -1.0, x, 1e-10);
  };
  EXPECT_LT(oracle::ks_one_sample(hs, cdf), oracle::ks_one_sample_critical(10000, 0.01));
  auto cdf_pos = [&](double x) { return 2.0 * (cdf(x) - 0.5); };
  EXPECT_LT(oracle::ks_one_sample(pos, cdf_pos), oracle::ks_one_sample_critical(10000, 0.01));
  for (double h : pos) ASSERT_GE(h, 0.0);
}

TEST(Rng, Deterministic) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.normal(), b.normal());
  EXPECT_NE(replicate_seed(1, 0), replicate_seed(1, 1));
  EXPECT_EQ(replicate_seed(7, 3), replicate_seed(7, 3));
}
