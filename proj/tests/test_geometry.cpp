#include <gtest/gtest.h>

#include <cmath>

#include "conducta/geometry.hpp"

using namespace conducta;

TEST(Curve, CircleCurvatureAndPerimeter) {
  const auto c = make_curve(CircleShape{1.0, Vec2::Zero()}, 64);
  for (int i = 0; i < c.size(); ++i) {
    EXPECT_NEAR(c.curvature(i), 1.0, 1e-14);
    EXPECT_NEAR(c.normal(i).norm(), 1.0, 1e-14);
  }
  EXPECT_NEAR(c.perimeter(), 2 * kPi, 1e-12);
}

TEST(Curve, KiteIsClosedAndSimple) {
  const auto c = make_curve(KiteShape{}, 128);
  const CurveJet a = evaluate_shape(c.shape(), 0.0), b = evaluate_shape(c.shape(), 2 * kPi);
  EXPECT_LT((a.x - b.x).norm(), 1e-14);
  EXPECT_LT((a.dx - b.dx).norm(), 1e-13);
  double dmin = 1e300;
  for (int i = 0; i < c.size(); ++i)
    for (int j = i + 1; j < c.size(); ++j) dmin = std::min(dmin, (c.point(i) - c.point(j)).norm());
  EXPECT_GT(dmin, 0.0);
  EXPECT_GT(c.area(), 0.0);
}

TEST(Curve, EllipseAreaAndPerimeter) {
  const auto c = make_curve(EllipseShape{1.0, 0.5, Vec2::Zero()}, 128);
  EXPECT_NEAR(c.area(), kPi * 0.5, 1e-12);
  // Complete elliptic integral value: 4 a E(1 - b^2/a^2).
  EXPECT_NEAR(c.perimeter(), 4.844224110273838, 1e-10);
}

TEST(Curve, RejectsOddOrSmallN) {
  EXPECT_THROW(make_curve(CircleShape{}, 63), GeometryError);
  EXPECT_THROW(make_curve(CircleShape{}, 8), GeometryError);
}

TEST(Curve, RejectsSelfIntersection) {
  // Large star amplitude does not self-intersect in the radial form; a
  // negative radius does.
  EXPECT_THROW(make_curve(StarShape{1.0, 1.5, 3, Vec2::Zero()}, 128), GeometryError);
}

TEST(Curve, FrameAtNodeMatchesStoredValues) {
  const auto c = make_curve(StarShape{1.0, 0.2, 5, Vec2(0.1, -0.2)}, 64);
  for (int i = 0; i < c.size(); i += 7) {
    const CurveFrame f = curve_frame(c, c.param(i));
    EXPECT_LT((f.point - c.point(i)).norm(), 1e-15);
    EXPECT_LT((f.normal - c.normal(i)).norm(), 1e-15);
    EXPECT_NEAR(f.speed, c.speed(i), 1e-15);
    EXPECT_NEAR(f.curvature, c.curvature(i), 1e-13);
    EXPECT_LT(std::abs(f.normal.dot(f.tangent)), 1e-14);
  }
}

TEST(Curve, CircleRadiusTwoFrame) {
  const auto c = make_curve(CircleShape{2.0, Vec2::Zero()}, 32);
  const CurveFrame f = curve_frame(c, 0.0);
  EXPECT_LT((f.point - Vec2(2, 0)).norm(), 1e-15);
  EXPECT_LT((f.normal - Vec2(1, 0)).norm(), 1e-15);
  EXPECT_NEAR(f.speed, 2.0, 1e-15);
}

TEST(Curve, KiteFrameMatchesFiniteDifferences) {
  const auto c = make_curve(KiteShape{}, 64);
  const double t = kPi / 3, h = 1e-5;
  auto x = [&](double s) { return evaluate_shape(c.shape(), s).x; };
  const Vec2 d1 = (x(t + h) - x(t - h)) / (2 * h);
  const Vec2 d2 = (x(t + h) - 2 * x(t) + x(t - h)) / (h * h);
  const CurveJet jet = evaluate_shape(c.shape(), t);
  EXPECT_LT((jet.dx - d1).norm(), 1e-9);
  EXPECT_LT((jet.ddx - d2).norm(), 1e-5);
  const CurveFrame f = curve_frame(c, t);
  EXPECT_LT(std::abs(f.normal.dot(f.tangent)), 1e-14);
  // outward: points away from an interior point
  EXPECT_GT(f.normal.dot(f.point - Vec2(-0.3, 0.0)), 0.0);
}

TEST(Curve, DoublingNKeepsSharedNodes) {
  const auto a = make_curve(KiteShape{}, 64), b = make_curve(KiteShape{}, 128);
  for (int i = 0; i < 64; ++i) {
    EXPECT_LT((a.point(i) - b.point(2 * i)).norm(), 1e-14);
    EXPECT_LT((a.normal(i) - b.normal(2 * i)).norm(), 1e-14);
  }
}

TEST(Curve, WindingNumberContainment) {
  const auto c = make_curve(KiteShape{}, 128);
  EXPECT_TRUE(c.contains(Vec2(-0.3, 0.0)));
  EXPECT_FALSE(c.contains(Vec2(3.0, 0.0)));
}

TEST(Gamma, SamplesRoundTrip) {
  const auto outer = make_curve(CircleShape{}, 32);
  const auto g = GammaProfile::from_cos_sin({0.3, 0.1}, {});
  EXPECT_NEAR(std::abs(g(0.0) - cplx{0.4}), 0.0, 1e-15);
  const auto h = GammaProfile::from_samples(g.samples(outer));
  EXPECT_EQ(h.band(), 1);
  for (double t : {0.1, 1.3, 4.0}) EXPECT_LT(std::abs(g(t) - h(t)), 1e-14);
}

namespace {

ScattererConfig disk_with_inner(double outer_r, double inner_r, Vec2 inner_c) {
  ScattererConfig cfg;
  cfg.outer = make_curve(CircleShape{outer_r, Vec2::Zero()}, 64);
  cfg.obstacles.push_back(make_curve(CircleShape{inner_r, inner_c}, 32));
  cfg.obstacle_conditions.push_back(ObstacleCondition::neumann());
  cfg.lambda = 2.0;
  cfg.n = 1.5;
  cfg.gamma = GammaProfile::constant(0.3);
  return cfg;
}

bool has_code(const ValidationError& e, const std::string& code, int comp) {
  for (const auto& i : e.issues())
    if (i.code == code && i.component == comp) return true;
  return false;
}

}  // namespace

TEST(Validate, AcceptsNestedDisks) {
  const auto cfg = disk_with_inner(1.0, 0.4, Vec2::Zero());
  EXPECT_NO_THROW(validate_scatterer(cfg));
}

TEST(Validate, RejectsWrongConductiveSign) {
  auto cfg = disk_with_inner(1.0, 0.4, Vec2::Zero());
  cfg.gamma = GammaProfile::from_cos_sin({cplx(0.2, 0.0), cplx(0.0, 0.1)}, {});
  try {
    validate_scatterer(cfg);
    FAIL();
  } catch (const ValidationError& e) {
    bool found = false;
    for (const auto& i : e.issues()) found |= (i.code == "conductive sign");
    EXPECT_TRUE(found);
  }
}

TEST(Validate, RejectsObstacleCrossingBoundary) {
  const auto cfg = disk_with_inner(1.0, 0.4, Vec2(0.8, 0.0));
  try {
    validate_scatterer(cfg);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(has_code(e, "containment", 0));
  }
}

TEST(Validate, RejectsOverlappingObstacles) {
  auto cfg = disk_with_inner(1.0, 0.3, Vec2(-0.2, 0.0));
  cfg.obstacles.push_back(make_curve(CircleShape{0.3, Vec2(0.2, 0.0)}, 32));
  cfg.obstacle_conditions.push_back(ObstacleCondition::dirichlet());
  try {
    validate_scatterer(cfg);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(has_code(e, "overlap", 0));
  }
}

TEST(Validate, RejectsSourceInside) {
  const auto cfg = disk_with_inner(1.0, 0.4, Vec2::Zero());
  EXPECT_THROW(validate_incidence(cfg, PointSource{Vec2(0.7, 0.0)}), ValidationError);
  EXPECT_NO_THROW(validate_incidence(cfg, PointSource{Vec2(1.5, 0.0)}));
}

TEST(Validate, RejectsNegativeImagN) {
  auto cfg = disk_with_inner(1.0, 0.4, Vec2::Zero());
  cfg.n = cplx(1.5, -0.1);
  EXPECT_THROW(validate_scatterer(cfg), ValidationError);
}
