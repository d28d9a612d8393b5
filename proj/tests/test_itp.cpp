#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "conducta/itp.hpp"

using namespace conducta;

TEST(Splitting, WorkedInterval) {
  const auto r = lemma31_feasible(10.0, 0.5, 3.0);
  EXPECT_TRUE(r.primary.feasible());
  EXPECT_NEAR(r.primary.lo, 0.1875, 1e-15);
  EXPECT_NEAR(r.primary.hi, 0.5, 1e-15);
  EXPECT_FALSE(r.swapped_tried);
}

TEST(Splitting, ContradictoryDataIsEmpty) {
  // eps * 0.1 > 1 with eps < 1 is impossible
  EXPECT_FALSE(splitting_interval(0.1, 1.0, 5.0).feasible());
}

TEST(Splitting, UnitRatioIsExcluded) {
  for (double b1 : {0.5, 2.0, 50.0})
    for (double b2 : {0.1, 0.9, 3.0}) EXPECT_FALSE(splitting_interval(b1, b2, 1.0).feasible());
}

TEST(Splitting, ExchangeRetryWhenRatioBelowOne) {
  // lambda1/lambda2 = 0.25: infeasible as posed, feasible with the media swapped
  const auto r = lemma31_feasible(0.5, 10.0, 0.25);
  EXPECT_FALSE(r.primary.feasible());
  ASSERT_TRUE(r.swapped_tried);
  const auto s = splitting_interval(10.0, 0.5, 4.0);
  EXPECT_EQ(r.swapped.lo, s.lo);
  EXPECT_EQ(r.swapped.hi, s.hi);
  EXPECT_TRUE(r.feasible());
}

TEST(Splitting, RandomSamplesSatisfyInequalities) {
  std::mt19937_64 rng(7);
  const double b1 = 10.0, b2 = 0.5, rho = 3.0, q = 0.25 * (1 + b2) * (1 + b2);
  const auto iv = splitting_interval(b1, b2, rho);
  std::uniform_real_distribution<double> u(iv.lo, iv.hi);
  for (int i = 0; i < 1000; ++i) {
    const double e = u(rng);
    if (e == iv.lo) continue;
    EXPECT_LT(e, std::min(b2, 1.0));
    EXPECT_GT(e * b1, q);
    EXPECT_GT(e * rho, q);
  }
}

TEST(Splitting, RejectsNonpositive) { EXPECT_THROW(splitting_interval(-1.0, 1.0, 2.0), ItpError); }

TEST(DirichletEigenvalue, ValueAndScaling) {
  EXPECT_NEAR(dirichlet_eig_disk(1.0), 5.783185962946785, 1e-13);
  EXPECT_NEAR(dirichlet_eig_disk(0.5) / dirichlet_eig_disk(1.0), 4.0, 1e-14);
  EXPECT_GT(dirichlet_eig_disk(1.0), dirichlet_eig_disk(1.3));
}

TEST(DirichletEigenvalue, FirstModeAttainsRayleighQuotient) {
  const double R = 0.7, j = bessel_j0_first_zero();
  const auto g = gauss_legendre(60, 0.0, R);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const double r = g.nodes[i];
    const auto b = bessel01(cplx{j * r / R});
    const double u = b.j0.real(), du = -(j / R) * b.j1.real();
    num += g.weights[i] * du * du * r;
    den += g.weights[i] * u * u * r;
  }
  EXPECT_NEAR(num / den, dirichlet_eig_disk(R), 1e-10 * dirichlet_eig_disk(R));
}

TEST(FluxConstant, LinearScalingAndClosedForm) {
  const double c1 = c1_disk(1.0);
  EXPECT_NEAR(c1_disk(0.5) / c1, 0.5, 1e-8);
  EXPECT_NEAR(c1_disk(2.0) / c1, 2.0, 1e-8);
  // in the plane the supremum is attained by Delta u = const: C1(B_R) = R/2
  EXPECT_NEAR(c1, 0.5, 1e-12);
}

TEST(FluxConstant, MonotoneInSubspace) {
  double prev = 0.0;
  for (int rad : {16, 20, 24, 32}) {
    const double c = c1_disk(1.0, 8, rad);
    EXPECT_GE(c, prev - 1e-14);
    prev = c;
  }
  EXPECT_THROW(c1_disk(1.0, 4, 16), ItpError);
}

TEST(Conditions, WorkedExamples) {
  const auto r1 = thm33_check(ItpParameters::constant(1.0, 0.5, 1.0, 1.0, 1.0));
  EXPECT_TRUE(r1.conditions[0].holds);
  EXPECT_NEAR(r1.conditions[0].margin, 4.783185962946785, 1e-12);
  const auto r6 = thm33_check(ItpParameters::constant(1.0, 2.0, 1.0, 0.0, 1.0));
  EXPECT_TRUE(r6.conditions[5].holds);
  EXPECT_NEAR(r6.conditions[5].margin, 5.783185962946785 * 2.0 / 4.0 - 1.0, 1e-12);
  // only the matching sign pattern is ever applicable
  for (int c : {2, 3, 4, 5, 6}) EXPECT_FALSE(r1.conditions[c - 1].applicable);
}

TEST(Conditions, LargeDomainsFail) {
  for (const auto& p : {ItpParameters::constant(1.0, 0.5, 1.0, 1.0, 50.0),
                        ItpParameters::constant(1.0, 2.0, 1.0, 3.0, 50.0),
                        ItpParameters::constant(1.0, 2.0, 1.0, 0.0, 50.0)})
    EXPECT_FALSE(thm33_check(p).any());
}

TEST(Conditions, BoundaryConditionFamilyUsesConservativeC1) {
  const auto r = thm33_check(ItpParameters::constant(1.0, 2.0, 1.0, 10.0, 0.5));
  EXPECT_TRUE(r.conditions[2].holds);
  EXPECT_NEAR(r.c1_upper, 1.5 * 0.5 * 0.5, 1e-12);
}

TEST(Conditions, DeltaOneViolationReported) {
  auto p = ItpParameters::constant(1.0, 1.0, 1.0 + 1e-9, 1.0, 0.5);
  const auto r = thm33_check(p);
  EXPECT_FALSE(r.admissible);
  EXPECT_FALSE(r.any());
}

TEST(Radius, ClosedFormForSimpleFamily) {
  const double k = 1.3, n2 = 1.7;
  const double closed = bessel_j0_first_zero() * std::sqrt(n2) / (k * n2);
  EXPECT_NEAR(max_wellposed_radius(k, 0.5, n2, 1.0), closed, 1e-8 * closed);
  EXPECT_NEAR(max_wellposed_radius(k, 0.5, n2, 0.0), closed, 1e-8 * closed);
}

TEST(Radius, ScalingAndSymmetry) {
  const double r = max_wellposed_radius(1.0, 2.0, 1.0, -1.0);
  EXPECT_NEAR(max_wellposed_radius(2.0, 2.0, 1.0, -1.0), 0.5 * r, 1e-10 * r);
  // (n1, n2, eta) -> (n2, n1, -eta) exchanges conditions 1 and 2
  EXPECT_NEAR(max_wellposed_radius(1.0, 0.5, 1.5, 0.7), max_wellposed_radius(1.0, 1.5, 0.5, -0.7), 1e-10);
}

TEST(Radius, AlwaysPositive) {
  for (double eta : {-2.0, 0.0, 0.3, 5.0})
    for (auto [n1, n2] : {std::pair{0.5, 1.0}, std::pair{3.0, 1.2}}) EXPECT_GT(max_wellposed_radius(2.0, n1, n2, eta), 0.0);
}

TEST(Coercivity, PositiveWhenConditionHolds) {
  for (const auto& p : {ItpParameters::constant(1.0, 0.5, 1.0, 1.0, 1.0), ItpParameters::constant(1.0, 2.0, 1.0, 0.0, 1.0),
                        ItpParameters::constant(1.0, 2.0, 1.0, 10.0, 0.5), ItpParameters::constant(1.0, 2.0, 1.0, -1.0, 1.0)}) {
    ASSERT_TRUE(thm33_check(p).any());
    EXPECT_GT(coercivity_lower_bound(p, 32, 32).bound, 0.0);
  }
}

TEST(Coercivity, FailsForLargeWavenumber) {
  const auto p = ItpParameters::constant(20.0, 0.5, 1.0, 1.0, 1.0);
  EXPECT_FALSE(thm33_check(p).any());
  EXPECT_LE(coercivity_lower_bound(p, 32, 32).bound, 0.0);
}

TEST(Coercivity, BoundaryTermVanishesAsEtaGrows) {
  // eta -> infinity on H^2 cap H^1_0 approaches the same form without boundary term
  const auto far = coercivity_lower_bound(ItpParameters::constant(1.0, 0.5, 1.0, 1e12, 1.0), 16, 16).bound;
  double prev = std::numeric_limits<double>::infinity();
  for (double eta : {1.0, 10.0, 100.0, 1e4}) {
    const double b = coercivity_lower_bound(ItpParameters::constant(1.0, 0.5, 1.0, eta, 1.0), 16, 16).bound;
    EXPECT_LE(std::abs(b - far), std::abs(prev - far) + 1e-12);
    prev = b;
  }
  EXPECT_LT(std::abs(prev - far), 1e-3);
}
