#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "conducta/inverse.hpp"
#include "conducta/oracle.hpp"

using namespace conducta;

namespace {

ScattererConfig baseline(CurveShape shape, int N = 128) {
  ScattererConfig c;
  c.outer = make_curve(shape, N);
  c.k = 2.0;
  c.lambda = 2.0;
  c.n = 1.5;
  c.gamma = GammaProfile::constant(0.3);
  return c;
}

ScattererConfig disk() { return baseline(CircleShape{1.0, Vec2::Zero()}); }

ScattererConfig kite_with_obstacle(ObstacleCondition cond) {
  ScattererConfig c = baseline(KiteShape{1.0, Vec2::Zero()});
  c.obstacles = {make_curve(CircleShape{0.3, Vec2(0.1, 0.0)}, 64)};
  c.obstacle_conditions = {cond};
  return c;
}

}  // namespace

TEST(FarFieldMatrix, TransparentIsZero) {
  ScattererConfig c = disk();
  c.lambda = 1.0;
  c.n = 1.0;
  c.gamma = GammaProfile::constant(0.0);
  const auto F = far_field_matrix(c, 16, 16);
  EXPECT_LT(F.values.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(reciprocity_check(F).max_abs, 1e-12);
}

TEST(FarFieldMatrix, EquispacedGrid) {
  const auto F = far_field_matrix(disk(), 16, 16);
  ASSERT_EQ(F.rows(), 16);
  ASSERT_EQ(F.cols(), 16);
  for (int i = 0; i < 16; ++i) {
    EXPECT_NEAR(F.observations[i], 2.0 * kPi * i / 16, 1e-15);
    EXPECT_NEAR(F.incidences[i], 2.0 * kPi * i / 16, 1e-15);
  }
  EXPECT_EQ(F.normalization, std::string(kFarFieldNormalization));
}

TEST(FarFieldMatrix, DiskColumnsMatchSeries) {
  const ScattererConfig c = disk();
  const auto F = far_field_matrix(c, 32, 8);
  const RadialConfig rc = radial_from_scatterer(c);
  for (int j = 0; j < F.cols(); ++j) {
    const auto ref = series_far_field(series_solve(rc, plane_wave(F.incidences[j])), F.observations).values;
    EXPECT_LT(relative_l2(F.values.col(j), ref), 1e-6) << "column " << j;
  }
}

TEST(Reciprocity, EngineMatrices) {
  EXPECT_LT(reciprocity_check(far_field_matrix(disk(), 16, 16)).max_abs, 1e-8);
  for (const auto& cond : {ObstacleCondition::dirichlet(), ObstacleCondition::neumann(), ObstacleCondition::impedance(0.7)})
    EXPECT_LT(reciprocity_check(far_field_matrix(kite_with_obstacle(cond), 16, 16)).max_abs, 1e-8);
  ScattererConfig lossy = disk();
  lossy.n = cplx(1.5, 0.4);
  lossy.gamma = GammaProfile::from_cos_sin({cplx(0.3, -0.2), 0.1}, {0.05});
  EXPECT_LT(reciprocity_check(far_field_matrix(lossy, 16, 16)).max_abs, 1e-8);
}

TEST(Reciprocity, CatchesCorruption) {
  FarFieldMatrix F = far_field_matrix(disk(), 16, 16);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int j = 0; j < 16; ++j)
    for (int i = 0; i < 16; ++i) F.values(i, j) = cplx(g(rng), g(rng));
  EXPECT_GT(reciprocity_check(F).max_abs, 0.1);
}

TEST(Reciprocity, NeedsNegationClosedGrids) {
  EXPECT_THROW(reciprocity_check(far_field_matrix(disk(), 15, 15)), ValidationError);
  FarFieldMatrix F = far_field_matrix(disk(), 8, 8);
  std::swap(F.observations[1], F.observations[2]);
  EXPECT_THROW(reciprocity_check(F), ValidationError);
}

TEST(MixedReciprocity, UnitConstantUnderNormalization) {
  for (const ScattererConfig& c : {disk(), kite_with_obstacle(ObstacleCondition::impedance(0.7))}) {
    const ForwardSolver solver(c);
    const Vec2 x(2.3, 0.6);
    for (double a : {0.0, 1.1, 2.9, 4.4}) {
      const cplx near = scattered_and_transmitted(solver.solve(plane_wave(a)), {x}, false).value[0];
      const cplx far = far_field(solver.solve(PointSource{x}), {a + kPi}).values[0];
      EXPECT_LT(std::abs(near - far), 1e-8 * std::abs(near));
    }
  }
}

TEST(MixedReciprocity, SynthesisMatchesDirectSolves) {
  const ScattererConfig c = disk();
  const auto F = far_field_matrix(c, 32, 32);
  const ForwardSolver solver(c);
  for (double dist : {1.0, 0.5}) {
    const Vec2 x = (1.0 + dist) * Vec2(std::cos(0.7), std::sin(0.7));
    const auto syn = mixed_reciprocity_synthesize(F, c.outer, x);
    EXPECT_NEAR(syn.discrepancy, 1e-3, 1e-6);
    std::vector<double> opposite;
    for (double a : F.incidences) opposite.push_back(a + kPi);
    const CVector direct = far_field(solver.solve(PointSource{x}), opposite).values;
    EXPECT_LT(relative_l2(syn.values, direct), 0.05) << "distance " << dist;
  }
}

TEST(MixedReciprocity, TargetUnattainableCloseToBoundary) {
  const ScattererConfig c = disk();
  const auto F = far_field_matrix(c, 32, 32);
  EXPECT_THROW(mixed_reciprocity_synthesize(F, c.outer, Vec2(1.3, 0.0)), InverseError);
  EXPECT_THROW(mixed_reciprocity_synthesize(F, c.outer, Vec2(0.5, 0.0)), ValidationError);
}

TEST(MixedReciprocity, TransparentSynthesisVanishes) {
  ScattererConfig c = disk();
  c.lambda = 1.0;
  c.n = 1.0;
  c.gamma = GammaProfile::constant(0.0);
  const auto syn = mixed_reciprocity_synthesize(far_field_matrix(c, 32, 32), c.outer, Vec2(2.0, 0.0));
  EXPECT_LT(syn.values.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Lsm, PositiveAndDecaysFarOutside) {
  const ScattererConfig c = disk();
  const auto F = far_field_matrix(c, 32, 32);
  SearchBox box{-2.0, 2.0, -2.0, 2.0, 41, 41};
  const auto I = lsm_indicator(F, box);
  EXPECT_GT(I.values.minCoeff(), 0.0);
  EXPECT_NEAR(I.alpha, 1e-4 * I.sigma_max * I.sigma_max, 1e-18);
  double adjacent = std::numeric_limits<double>::infinity();
  const double h = (box.xmax - box.xmin) / (box.nx - 1);
  for (int j = 0; j < box.ny; ++j)
    for (int i = 0; i < box.nx; ++i)
      if (std::abs(Vec2(box.x(i), box.y(j)).norm() - 1.0) < h) adjacent = std::min(adjacent, I.values(j, i));
  // the filtered indicator rises again once k|z| exceeds the retained bandwidth, so probe at |z| = 2.5
  for (double a = 0.0; a < 2.0 * kPi; a += kPi / 7.0) {
    const Vec2 z = 2.5 * Vec2(std::cos(a), std::sin(a));
    EXPECT_LT(lsm_indicator(F, SearchBox{z.x(), z.x() + 0.1, z.y(), z.y() + 0.1, 2, 2}).values(0, 0), adjacent);
  }
}

TEST(Lsm, DiskIndicatorRespectsGridSymmetry) {
  const auto F = far_field_matrix(disk(), 32, 32);
  const double rot = 2.0 * kPi * 5 / 32;
  for (const Vec2 z : {Vec2(0.3, 0.2), Vec2(1.1, -0.4), Vec2(-1.7, 0.9)}) {
    const Vec2 w(std::cos(rot) * z.x() - std::sin(rot) * z.y(), std::sin(rot) * z.x() + std::cos(rot) * z.y());
    const double a = lsm_indicator(F, SearchBox{z.x(), z.x() + 1.0, z.y(), z.y() + 1.0, 2, 2}).values(0, 0);
    const double b = lsm_indicator(F, SearchBox{w.x(), w.x() + 1.0, w.y(), w.y() + 1.0, 2, 2}).values(0, 0);
    EXPECT_NEAR(a, b, 1e-8 * a);
  }
}

TEST(Lsm, RejectsMismatchedGrids) {
  EXPECT_THROW(lsm_indicator(far_field_matrix(disk(), 16, 8), SearchBox{}), ValidationError);
}

TEST(Contour, MarchingSquaresOnRadialField) {
  IndicatorField f;
  f.box = SearchBox{-2.0, 2.0, -2.0, 2.0, 201, 201};
  f.values.resize(201, 201);
  for (int j = 0; j < 201; ++j)
    for (int i = 0; i < 201; ++i) f.values(j, i) = std::exp(-Vec2(f.box.x(i), f.box.y(j)).squaredNorm());
  // level 0.5 max sits on r = sqrt(ln 2)
  const auto pts = lsm_contour(f, 0.5);
  const double r = std::sqrt(std::log(2.0));
  for (const auto& p : pts) EXPECT_NEAR(p.norm(), r, 2e-3);
  EXPECT_LT(hausdorff_to_curve(pts, make_curve(CircleShape{r, Vec2::Zero()}, 64)), 0.02);
}

TEST(Contour, HausdorffBasics) {
  const std::vector<Vec2> a{Vec2(0, 0), Vec2(1, 0)}, b{Vec2(0, 0), Vec2(1, 0.5)};
  EXPECT_NEAR(hausdorff_distance(a, b), 0.5, 1e-15);
  EXPECT_NEAR(hausdorff_distance(a, a), 0.0, 0.0);
  EXPECT_TRUE(std::isinf(hausdorff_distance(a, {})));
}

TEST(Distinguishability, IdenticalAndPerturbed) {
  const ScattererConfig a = disk();
  EXPECT_EQ(distinguishability(a, a, 16), 0.0);
  ScattererConfig b = a;
  b.lambda = 2.2;
  EXPECT_GT(distinguishability(a, b, 16), 1e-3);
}

TEST(Distinguishability, MonotoneInPerturbation) {
  const ScattererConfig a = disk();
  auto perturbed = [&](int which, double eps) {
    ScattererConfig b = a;
    if (which == 0) b.lambda *= 1.0 + eps;
    if (which == 1) b.gamma = GammaProfile::constant(0.3 * (1.0 + eps));
    if (which == 2) b.n *= 1.0 + eps;
    return distinguishability(a, b, 16);
  };
  for (int which = 0; which < 3; ++which) {
    const double d1 = perturbed(which, 0.05), d2 = perturbed(which, 0.1), d3 = perturbed(which, 0.2);
    EXPECT_LT(d1, d2) << which;
    EXPECT_LT(d2, d3) << which;
  }
}

TEST(Distinguishability, ObstacleChangesData) {
  ScattererConfig a = kite_with_obstacle(ObstacleCondition::neumann());
  ScattererConfig b = a;
  b.obstacles = {make_curve(CircleShape{0.3, Vec2(-0.2, 0.3)}, 64)};
  EXPECT_GT(distinguishability(a, b, 16), 0.0);
}

TEST(Noise, ScaledAndSeeded) {
  const auto F = far_field_matrix(disk(), 16, 16);
  EXPECT_EQ((add_relative_noise(F, 0.0, 1).values - F.values).norm(), 0.0);
  const auto G = add_relative_noise(F, 0.01, 42), H = add_relative_noise(F, 0.01, 42);
  EXPECT_EQ((G.values - H.values).norm(), 0.0);
  EXPECT_NEAR((G.values - F.values).norm() / F.values.norm(), 0.01, 0.002);
}
