#include <gtest/gtest.h>

#include <cmath>

#include "conducta/forward.hpp"

using namespace conducta;

namespace {

ScattererConfig disk(int n, double lambda, cplx nval, cplx gamma) {
  ScattererConfig cfg;
  cfg.outer = make_curve(CircleShape{}, n);
  cfg.k = 1.0;
  cfg.lambda = lambda;
  cfg.n = nval;
  cfg.gamma = GammaProfile::constant(gamma);
  return cfg;
}

ScattererConfig kite(int n) {
  ScattererConfig cfg;
  cfg.outer = make_curve(KiteShape{}, n);
  cfg.k = 1.5;
  cfg.lambda = 2.0;
  cfg.n = 1.5;
  cfg.gamma = GammaProfile::from_cos_sin({0.3, 0.1}, {});
  return cfg;
}

void add_obstacle(ScattererConfig& cfg, double r, ObstacleCondition bc, int n = 64, Vec2 c = Vec2::Zero()) {
  cfg.obstacles.push_back(make_curve(CircleShape{r, c}, n));
  cfg.obstacle_conditions.push_back(bc);
}

}  // namespace

TEST(Incident, PlaneWaveAtOrigin) {
  const auto f = incident_field(PlaneWave{Vec2(1, 0)}, {Vec2(0, 0)}, 2.0);
  EXPECT_LT(std::abs(f.value[0] - 1.0), 1e-15);
  EXPECT_LT(std::abs(f.grad[0][0] - cplx(0, 2.0)), 1e-15);
  EXPECT_LT(std::abs(f.grad[0][1]), 1e-15);
}

TEST(Incident, PointSourceValue) {
  const auto f = incident_field(PointSource{Vec2(1, 1)}, {Vec2(1, 2)}, 1.0);
  EXPECT_NEAR(f.value[0].real(), -0.0220642, 1e-6);
  EXPECT_NEAR(f.value[0].imag(), 0.1912992, 1e-6);
}

TEST(Incident, DipoleIsDirectionalDerivative) {
  const Vec2 z(2.0, 0.5), a = Vec2(0.6, 0.8), x(0.1, -0.3);
  const double k = 1.3, h = 1e-5;
  const auto f = incident_field(Dipole{z, a}, {x}, k);
  auto phi = [&](const Vec2& p) { return phi_helmholtz(p, z, k).value; };
  const cplx fd = (phi(x + h * a) - phi(x - h * a)) / (2 * h);
  EXPECT_LT(std::abs(fd - f.value[0]), 1e-6);
  // its gradient, by differencing the dipole field itself
  const auto fx = incident_field(Dipole{z, a}, {x + Vec2(h, 0), x - Vec2(h, 0)}, k);
  EXPECT_LT(std::abs((fx.value[0] - fx.value[1]) / (2 * h) - f.grad[0][0]), 1e-6);
}

TEST(Incident, EvaluationAtSourceThrows) {
  EXPECT_THROW(incident_field(PointSource{Vec2(1, 1)}, {Vec2(1, 1)}, 1.0), EvaluationError);
}

TEST(System, BlockDimensions) {
  auto cfg = disk(128, 2.0, 1.5, 0.3);
  add_obstacle(cfg, 0.4, ObstacleCondition::impedance(0.5), 64);
  EXPECT_EQ(assemble_system(cfg)->size(), 320);
}

TEST(System, TransparentMediumHasNoScattering) {
  const auto cfg = disk(64, 1.0, 1.0, 0.0);
  const auto sys = assemble_system(cfg);
  const auto& s = *sys;
  // equal wavenumbers: operator differences vanish, leaving the identity
  EXPECT_LT((s.matrix - CMatrix::Identity(128, 128)).cwiseAbs().maxCoeff(), 1e-14);
  const auto sol = solve_forward(cfg, plane_wave(0.4));
  const auto ff = far_field(sol, equispaced_angles(16));
  EXPECT_LT(ff.values.cwiseAbs().maxCoeff(), 1e-10);
  const std::vector<Vec2> pts = {Vec2(0.2, 0.1), Vec2(-0.5, 0.3), Vec2(1.5, 0.0)};
  const auto f = scattered_and_transmitted(sol, pts, false);
  const auto ui = incident_field(plane_wave(0.4), pts, 1.0);
  EXPECT_LT(std::abs(f.value[0] - ui.value[0]), 1e-10);
  EXPECT_LT(std::abs(f.value[1] - ui.value[1]), 1e-10);
  EXPECT_LT(std::abs(f.value[2]), 1e-10);
}

TEST(System, ConditionFiniteAwayFromResonance) {
  auto cfg = disk(256, 2.0, 1.5, 0.3);
  add_obstacle(cfg, 0.4, ObstacleCondition::impedance(0.5), 128);
  ForwardSolver solver(cfg);
  EXPECT_TRUE(std::isfinite(solver.condition()));
  EXPECT_LT(solver.condition(), 1e6);
}

TEST(System, ResonantDirichletObstacleRaises) {
  // The single layer on a circle of radius Rb annihilates constants when
  // J0(k1 Rb) = 0.
  auto cfg = disk(64, 1.0, 1.0, 0.0);
  const double rb = bessel_j0_first_zero() / cfg.k / 4.0;
  cfg.k = 4.0;
  add_obstacle(cfg, rb, ObstacleCondition::dirichlet(), 64);
  EXPECT_THROW(ForwardSolver{cfg}, ResonanceError);
}

TEST(Solve, PointSourceNearBoundaryResidual) {
  auto cfg = kite(256);
  const Incidence inc = PointSource{Vec2(1.5, 0.0)};  // rightmost point of the kite is x = 1
  const auto sol = solve_forward(cfg, inc);
  EXPECT_LE(sol.residual_norm, 1e-10);
  ASSERT_TRUE(sol.offnode_checked);
  EXPECT_LE(sol.offnode.max(), 1e-6);
}

TEST(Solve, ObstacleConditionsHoldOffNode) {
  for (auto bc : {ObstacleCondition::dirichlet(), ObstacleCondition::neumann(), ObstacleCondition::impedance(0.5)}) {
    auto cfg = kite(192);
    add_obstacle(cfg, 0.3, bc, 64, Vec2(-0.3, 0.0));
    const auto sol = solve_forward(cfg, plane_wave(1.0));
    EXPECT_LE(sol.residual_norm, 1e-10);
    EXPECT_LE(sol.offnode.max(), 1e-6) << "cont " << sol.offnode.continuity << " flux " << sol.offnode.flux
                                       << " obst " << sol.offnode.obstacle;
  }
}

TEST(Solve, RejectsSourceInside) {
  EXPECT_THROW(solve_forward(kite(64), PointSource{Vec2(-0.3, 0.0)}), ValidationError);
}

TEST(Fields, RadiationDecay) {
  const auto sol = solve_forward(kite(128), plane_wave(0.0));
  const auto f = scattered_and_transmitted(sol, {Vec2(1e3, 0.0), Vec2(2e3, 0.0)}, false);
  EXPECT_NEAR(std::abs(f.value[0]) / std::abs(f.value[1]), std::sqrt(2.0), 0.01 * std::sqrt(2.0));
}

TEST(Fields, InteriorAndExteriorHelmholtzStencil) {
  const auto cfg = kite(128);
  const auto sol = solve_forward(cfg, plane_wave(0.3));
  const cplx k1 = cfg.interior_wavenumber();
  for (const auto& [x, kk] : {std::pair<Vec2, cplx>{Vec2(-0.3, 0.2), k1}, {Vec2(2.0, 1.0), cplx(cfg.k)}}) {
    auto res = [&](double h) {
      const auto f = scattered_and_transmitted(
          sol, {x, x + Vec2(h, 0), x - Vec2(h, 0), x + Vec2(0, h), x - Vec2(0, h)}, false);
      return std::abs((f.value[1] + f.value[2] + f.value[3] + f.value[4] - 4.0 * f.value[0]) / (h * h) +
                      kk * kk * f.value[0]);
    };
    EXPECT_NEAR(res(2e-2) / res(1e-2), 4.0, 0.3);
  }
}

TEST(Fields, ObstacleInteriorRejected) {
  auto cfg = kite(64);
  add_obstacle(cfg, 0.3, ObstacleCondition::neumann(), 32, Vec2(-0.3, 0.0));
  const auto sol = solve_forward(cfg, plane_wave(0.0), {false});
  EXPECT_THROW(scattered_and_transmitted(sol, {Vec2(-0.3, 0.0)}, false), RegionError);
}

TEST(FarField, SelfConvergence) {
  const auto angles = equispaced_angles(32);
  const auto a = far_field(solve_forward(kite(192), plane_wave(0.7), {false}), angles);
  const auto b = far_field(solve_forward(kite(384), plane_wave(0.7), {false}), angles);
  EXPECT_LE((a.values - b.values).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FarField, PlaneWaveReciprocity) {
  auto cfg = kite(192);
  add_obstacle(cfg, 0.3, ObstacleCondition::impedance(0.5), 64, Vec2(-0.3, 0.0));
  ForwardSolver solver(cfg, {false});
  const double xh = 0.8, d = 2.1;
  const auto a = far_field(solver.solve(plane_wave(d)), {xh});
  const auto b = far_field(solver.solve(plane_wave(xh + kPi)), {d + kPi});
  EXPECT_LE(std::abs(a.values[0] - b.values[0]), 1e-8);
}

TEST(FarField, DiskSymmetricAboutIncidenceAxis) {
  auto cfg = disk(128, 2.0, 1.5, 0.3);
  const double d = 0.0;
  const auto sol = solve_forward(cfg, plane_wave(d), {false});
  const auto ff = far_field(sol, {0.7, -0.7 + 2 * kPi, 2.0, 2 * kPi - 2.0});
  EXPECT_LE(std::abs(ff.values[0] - ff.values[1]), 1e-12);
  EXPECT_LE(std::abs(ff.values[2] - ff.values[3]), 1e-12);
}

TEST(Energy, LosslessBalance) {
  for (auto bc : {ObstacleCondition::neumann(), ObstacleCondition::dirichlet()}) {
    auto cfg = kite(192);
    add_obstacle(cfg, 0.3, bc, 64, Vec2(-0.3, 0.0));
    const auto a = energy_audit(solve_forward(cfg, plane_wave(0.2), {false}));
    EXPECT_LE(a.balance_residual, 1e-8);
    EXPECT_LE(std::abs(a.exterior_flux) / a.field_scale, 1e-8);
  }
}

TEST(Energy, ImpedanceObstacleAbsorbs) {
  auto cfg = disk(128, 2.0, 1.5, 0.3);
  add_obstacle(cfg, 0.4, ObstacleCondition::impedance(0.5), 64);
  const auto a = energy_audit(solve_forward(cfg, plane_wave(0.0), {false}));
  EXPECT_LT(a.obstacle_flux, 0.0);
  EXPECT_LE(a.impedance_residual, 1e-6);
  EXPECT_LE(a.balance_residual, 1e-8);
}

TEST(Energy, AbsorbingMediumBalancesDissipation) {
  for (bool with_obstacle : {false, true}) {
    auto cfg = disk(128, 2.0, cplx(1.5, 0.2), 0.3);
    if (with_obstacle) add_obstacle(cfg, 0.4, ObstacleCondition::neumann(), 64);
    const auto a = energy_audit(solve_forward(cfg, plane_wave(0.0), {false}));
    ASSERT_TRUE(a.volume_computed);
    EXPECT_GT(a.dissipation, 0.0);
    const double influx = -(a.exterior_flux - a.conductive_loss - a.obstacle_flux);
    EXPECT_LE(std::abs(influx - a.dissipation) / a.dissipation, 1e-6) << "obstacle " << with_obstacle;
  }
}

TEST(Energy, ConductiveLossFromImaginaryGamma) {
  const auto cfg = disk(128, 2.0, 1.5, cplx(0.0, -0.2));
  const auto a = energy_audit(solve_forward(cfg, plane_wave(0.0), {false}));
  EXPECT_LT(a.conductive_loss, 0.0);
  EXPECT_LE(a.balance_residual, 1e-8);
  EXPECT_LE(std::abs(a.exterior_flux - a.conductive_loss) / std::abs(a.conductive_loss), 1e-8);
}
