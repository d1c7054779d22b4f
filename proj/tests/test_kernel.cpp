#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "properscore/kernel.hpp"
#include "properscore/rng.hpp"

using namespace properscore;

namespace {

std::vector<double> pt(std::initializer_list<double> v) { return v; }

}  // namespace

TEST(Kernels, VanishOnTheDiagonalAndAreSymmetric) {
  const Kernel ks[] = {euclidean_beta_kernel(1.0), euclidean_beta_kernel(0.5, 1.5), gaussian_kernel(1.0),
                       laplacian_kernel(2.0), variogram_kernel(0.5)};
  const auto x = pt({0.3, -1.2, 2.0});
  const auto y = pt({1.0, 0.5, -0.7});
  for (const auto& h : ks) {
    EXPECT_EQ(h(x, x), 0.0) << h.id();
    EXPECT_EQ(h(x, y), h(y, x)) << h.id();
    EXPECT_GT(h(x, y), 0.0) << h.id();
  }
}

TEST(Kernels, EuclideanBetaValues) {
  EXPECT_DOUBLE_EQ(euclidean_beta_kernel(1.0)(pt({0.0, 0.0}), pt({3.0, 4.0})), 5.0);
  EXPECT_DOUBLE_EQ(euclidean_beta_kernel(1.0, 1.0)(pt({0.0, 0.0}), pt({3.0, 4.0})), 7.0);
  EXPECT_NEAR(gaussian_kernel(1.0)(pt({0.0}), pt({1.0})), 2.0 - 2.0 * std::exp(-1.0), 1e-15);
  EXPECT_THROW(euclidean_beta_kernel(2.0), ValidationError);
  EXPECT_THROW(gaussian_kernel(0.0), ValidationError);
}

TEST(Kernels, ConditionallyNegativeDefinite) {
  Philox4x32 rng(4);
  const Kernel ks[] = {euclidean_beta_kernel(1.0), euclidean_beta_kernel(1.7), gaussian_kernel(0.7),
                       laplacian_kernel(1.3), variogram_kernel(1.0)};
  for (const auto& h : ks) {
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 6;
      std::vector<std::vector<double>> x(n, std::vector<double>(3));
      std::vector<double> a(n);
      double s = 0;
      for (int i = 0; i < n; ++i) {
        for (double& v : x[i]) v = rng.normal();
        a[i] = rng.normal();
        s += a[i];
      }
      for (double& v : a) v -= s / n;
      double q = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) q += a[i] * a[j] * h(x[i], x[j]);
      EXPECT_LE(q, 1e-12) << h.id();
    }
  }
}

TEST(KernelScore, CrpsKernelMatchesUnivariateCrps) {
  const Ensemble p({0.0, 1.0, 2.5, -0.5});
  const auto y = pt({0.7});
  const Kernel h = parse_kernel_spec("crps");
  EXPECT_NEAR(kernel_score_exact(h, p, y, EnsembleVariant::fair).value,
              crps_ensemble(p, 0.7, EnsembleVariant::fair).value, 1e-15);
  EXPECT_NEAR(kernel_score_exact(h, p, y, EnsembleVariant::empirical).value,
              crps_ensemble(p, 0.7, EnsembleVariant::empirical).value, 1e-15);
}

TEST(KernelScore, GaussianAtIdenticalPointIsZero) {
  EXPECT_EQ(kernel_score_exact(gaussian_kernel(1.0), Ensemble({0.0}), pt({0.0}), EnsembleVariant::empirical).value,
            0.0);
}

TEST(KernelScore, ChainingAndRescaling) {
  const Kernel base = euclidean_beta_kernel(1.0);
  const Kernel chained = weight_transform(base, threshold_chaining(0.5));
  EXPECT_DOUBLE_EQ(chained(pt({-1.0}), pt({0.0})), 0.0);
  EXPECT_DOUBLE_EQ(chained(pt({-1.0}), pt({2.0})), 1.5);
  const Kernel rescaled = weight_transform(base, Rescaling{[](std::span<const double> x) { return x[0]; }, "id"});
  EXPECT_DOUBLE_EQ(rescaled(pt({1.0}), pt({2.0})), 2.0);
  EXPECT_THROW(rescaled(pt({-1.0}), pt({2.0})), ValidationError);
  const Kernel tw = parse_kernel_spec("tw:base=energy:beta=1.0,t=0.5");
  EXPECT_DOUBLE_EQ(tw(pt({-1.0}), pt({2.0})), 1.5);
}

TEST(KernelDivergence, SymmetricNonnegativeAndZeroOnDiagonal) {
  const Kernel h = gaussian_kernel(1.0);
  const Ensemble p({0.0, 1.0, 2.0});
  const Ensemble q({0.5, 3.0}, {0.3, 0.7});
  EXPECT_EQ(kernel_divergence(h, p, q), kernel_divergence(h, q, p));
  EXPECT_GT(kernel_divergence(h, p, q), 0.0);
  EXPECT_EQ(kernel_divergence(h, p, p), 0.0);
}

TEST(KernelDivergence, EqualsScoreExcessOfEmpiricalMeasures) {
  // d(P, Q) = S(P, Q) - S(Q, Q) with S averaged over the atoms of Q.
  const Kernel h = euclidean_beta_kernel(1.0);
  const Ensemble p({0.0, 1.0, 2.0});
  const Ensemble q({0.5, 3.0});
  double spq = 0, sqq = 0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    spq += q.weight(j) * kernel_score_exact(h, p, q.member(j), EnsembleVariant::empirical).value;
    sqq += q.weight(j) * kernel_score_exact(h, q, q.member(j), EnsembleVariant::empirical).value;
  }
  EXPECT_NEAR(kernel_divergence(h, p, q), spq - sqq, 1e-14);
  EXPECT_NEAR(kernel_entropy(h, q), sqq, 1e-14);
}

TEST(KernelMonteCarlo, DeterministicWithFiniteStandardError) {
  const Kernel h = euclidean_beta_kernel(1.0);
  const auto sampler = forecast_sampler(Normal(0.0, 1.0));
  const auto a = kernel_score_mc(h, sampler, pt({0.0}), 500, 3);
  const auto b = kernel_score_mc(h, sampler, pt({0.0}), 500, 3);
  EXPECT_EQ(a.value, b.value);
  ASSERT_TRUE(a.se.has_value());
  EXPECT_GT(*a.se, 0.0);
  EXPECT_NEAR(a.value, 0.23369497725510907, 5 * *a.se);
  const auto two = kernel_score_mc(h, sampler, pt({0.0}), 2, 3);
  EXPECT_TRUE(std::isinf(*two.se));
}

TEST(KernelMonteCarlo, ExactOnResampledEnsembleInExpectation) {
  // Mean of the U-statistic over many seeds approaches the fair score of
  // the generating ensemble only through the bootstrap law, i.e. the
  // empirical score of that ensemble.
  const Kernel h = gaussian_kernel(1.0);
  const Ensemble p({-1.0, 0.0, 0.5, 2.0});
  const auto sampler = forecast_sampler(p);
  double total = 0;
  const int reps = 2000;
  for (int r = 0; r < reps; ++r) total += kernel_score_mc(h, sampler, pt({0.3}), 10, r).value;
  EXPECT_NEAR(total / reps, kernel_score_exact(h, p, pt({0.3}), EnsembleVariant::empirical).value, 0.01);
}

TEST(GeneralizedKernelScore, IdentityGReducesToKernelScore) {
  const Kernel h = euclidean_beta_kernel(1.0);
  const Ensemble p({0.0, 1.0, 2.0});
  EXPECT_NEAR(generalized_kernel_score(h, g_identity(), p, pt({0.4})).value,
              kernel_score_exact(h, p, pt({0.4}), EnsembleVariant::empirical).value, 1e-15);
}

TEST(GeneralizedKernelScore, ProperOnTwoPointOutcomes) {
  // Expected score under Q is minimized at P = Q among a family of ensembles.
  const Kernel h = euclidean_beta_kernel(1.0);
  for (const auto& g : {g_log1p(), g_sqrt_eps()}) {
    const Ensemble q({0.0, 1.0});
    auto expected = [&](const Ensemble& p) {
      return 0.5 * generalized_kernel_score(h, g, p, pt({0.0})).value +
             0.5 * generalized_kernel_score(h, g, p, pt({1.0})).value;
    };
    const double at_truth = expected(q);
    for (double a : {-0.5, 0.2, 0.5}) {
      for (double b : {0.5, 1.3, 2.0}) {
        EXPECT_GE(expected(Ensemble({a, b})), at_truth - 1e-12) << g.id;
      }
    }
  }
}
