#include <gtest/gtest.h>

#include <cmath>

#include "conducta/oracle.hpp"

using namespace conducta;

namespace {

RadialConfig disk(double lambda, cplx n, cplx gamma, double k = 1.0) {
  RadialConfig rc;
  rc.k = k;
  rc.lambda = lambda;
  rc.n = n;
  rc.gamma = GammaProfile::constant(gamma);
  return rc;
}

// Scattering coefficient T_m with u^s_m = T_m i^|m| H_m(kr) for plane wave
// incidence along +x.
cplx scattering_coefficient(const ModeTable& t, int m) {
  return std::exp(std::log(t.a[t.index(m)]) - t.log_h_outer[t.index(m)]) / std::pow(kI, std::abs(m));
}

}  // namespace

TEST(Series, TransparentHasNoScatteredModes) {
  const auto t = series_solve(disk(1.0, 1.0, 0.0), plane_wave(0.3));
  for (const auto& a : t.a) EXPECT_LT(std::abs(a), 1e-14);
  const std::vector<Vec2> pts = {Vec2(0.2, 0.1), Vec2(-0.6, 0.7), Vec2(0.0, 0.0), Vec2(0.999, 0.0)};
  const auto f = series_field_eval(t, pts, true);
  const auto ui = incident_field(plane_wave(0.3), pts, 1.0);
  for (int p = 0; p < 4; ++p) {
    EXPECT_LT(std::abs(f.value[p] - ui.value[p]), 1e-10);
    EXPECT_LT(std::abs(f.grad[p][0] - ui.grad[p][0]), 1e-9);
    EXPECT_LT(std::abs(f.grad[p][1] - ui.grad[p][1]), 1e-9);
  }
}

TEST(Series, SourceExpansionsReproduceIncidentField) {
  // transparent medium: v equals the incident wave right up to the boundary
  const auto rc = disk(1.0, 1.0, 0.0, 1.7);
  const Vec2 z(1.05 * std::cos(0.4), 1.05 * std::sin(0.4));
  const std::vector<Vec2> pts = {Vec2(0.3, -0.2), Vec2(0.99 * std::cos(0.4), 0.99 * std::sin(0.4))};
  for (const Incidence& inc : {Incidence{PointSource{z}}, Incidence{Dipole{z, Vec2(0.6, -0.8)}}}) {
    const auto t = series_solve(rc, inc);
    const auto f = series_field_eval(t, pts, true);
    const auto ui = incident_field(inc, pts, rc.k);
    for (int p = 0; p < 2; ++p) {
      const double scale = std::abs(ui.value[p]) + std::abs(ui.grad[p][0]) + std::abs(ui.grad[p][1]);
      EXPECT_LT(std::abs(f.value[p] - ui.value[p]), 1e-10 * scale);
      EXPECT_LT(std::abs(f.grad[p][0] - ui.grad[p][0]), 1e-10 * scale);
      EXPECT_LT(std::abs(f.grad[p][1] - ui.grad[p][1]), 1e-10 * scale);
    }
  }
}

TEST(Series, LosslessModesAreUnitary) {
  for (const auto& rc : {disk(1.0, 2.0, 0.0, 1.5), disk(2.0, 1.5, 0.3, 2.0)}) {
    const auto t = series_solve(rc, plane_wave(0.0));
    for (int m = -15; m <= 15; ++m) EXPECT_NEAR(std::abs(1.0 + 2.0 * scattering_coefficient(t, m)), 1.0, 1e-12);
  }
}

TEST(Series, AbsorptionShrinksScatteringCoefficient) {
  const auto t = series_solve(disk(2.0, cplx(1.5, 0.3), 0.0), plane_wave(0.0));
  for (int m = 0; m <= 5; ++m) EXPECT_LT(std::abs(1.0 + 2.0 * scattering_coefficient(t, m)), 1.0);
}

TEST(Series, SmallGammaMovesA0Monotonically) {
  const auto t0 = series_solve(disk(2.0, 1.5, 0.0), plane_wave(0.0));
  const cplx a0 = t0.a[t0.index(0)];
  double prev = 0.0;
  for (double g : {0.01, 0.02, 0.04, 0.08}) {
    const auto t = series_solve(disk(2.0, 1.5, g), plane_wave(0.0));
    const double d = std::abs(t.a[t.index(0)] - a0);
    EXPECT_GT(d, prev);
    prev = d;
  }
}

TEST(Series, TailCriterionHolds) {
  const Vec2 z(1.002, 0.0);
  for (const Incidence& inc : {plane_wave(0.2), Incidence{PointSource{z}}}) {
    const auto t = series_solve(disk(0.5, 1.3, 0.2), inc);
    double amax = 0.0;
    for (const auto& a : t.a) amax = std::max(amax, std::abs(a));
    EXPECT_LE(std::abs(t.a[t.index(t.M)]), 1e-14 * amax);
    EXPECT_LE(std::abs(t.a[t.index(-t.M)]), 1e-14 * amax);
  }
}

TEST(SeriesFarField, ZeroAndSingleModeBasis) {
  auto t = series_solve(disk(1.0, 1.0, 0.0), plane_wave(0.0));
  std::fill(t.a.begin(), t.a.end(), cplx{0.0});
  const auto angles = equispaced_angles(12);
  EXPECT_EQ(series_far_field(t, angles).values.cwiseAbs().maxCoeff(), 0.0);
  t.a[t.index(3)] = 0.7;
  const auto p = series_far_field(t, angles);
  for (int q = 1; q < 12; ++q)
    EXPECT_LT(std::abs(p.values[q] / p.values[0] - std::exp(kI * (3.0 * angles[q]))), 1e-14);
}

TEST(SeriesFarField, SoundSoftLimitMatchesClassicalSeries) {
  // gamma -> infinity forces v = u = 0 on the circle
  const double k = 2.0, R = 1.0, phi = 0.5;
  auto rc = disk(1.0, 1.0, 1e13, k);
  const auto t = series_solve(rc, plane_wave(phi));
  const auto angles = equispaced_angles(24);
  const auto p = series_far_field(t, angles);
  const auto j = bessel_j_sequence(cplx{k * R}, 40);
  const auto h = hankel1_sequence(cplx{k * R}, 40);
  for (std::size_t q = 0; q < angles.size(); ++q) {
    // u_inf = -4i sum (-i)^|m| (-i^|m| J_m/H_m) e^{im(theta - phi)} = 4i sum J_m/H_m e^{im(theta-phi)}
    cplx s{0.0};
    for (int m = -38; m <= 38; ++m) s += j[std::abs(m)] / h[std::abs(m)] * std::exp(kI * (m * (angles[q] - phi)));
    EXPECT_LT(std::abs(p.values[static_cast<int>(q)] - 4.0 * kI * s), 1e-9);
  }
}

TEST(SeriesField, TransmissionConditionsAcrossCircle) {
  for (cplx g : {cplx{0.0}, cplx{0.3, -0.2}}) {
    const auto rc = disk(2.0, 1.5, g, 1.3);
    const Incidence inc = plane_wave(0.4);
    const auto t = series_solve(rc, inc);
    for (double th : {0.0, 1.1, 2.5, 4.0}) {
      const Vec2 rh(std::cos(th), std::sin(th));
      const double eps = 1e-9;
      const std::vector<Vec2> pts = {(1 + eps) * rh, (1 - eps) * rh};
      const auto f = series_field_eval(t, pts, true);
      const auto ui = incident_field(inc, {pts[0]}, rc.k);
      const cplx u = f.value[0] + ui.value[0];
      const cplx du = (f.grad[0][0] + ui.grad[0][0]) * rh.x() + (f.grad[0][1] + ui.grad[0][1]) * rh.y();
      const cplx v = f.value[1];
      const cplx dv = f.grad[1][0] * rh.x() + f.grad[1][1] * rh.y();
      EXPECT_LT(std::abs(u - v), 1e-8);
      EXPECT_LT(std::abs(du - (rc.lambda * dv + g * v)), 1e-7);
    }
  }
}

TEST(SeriesField, ObstacleConditions) {
  for (auto bc : {ObstacleCondition::dirichlet(), ObstacleCondition::neumann(), ObstacleCondition::impedance(0.5)}) {
    auto rc = disk(2.0, 1.5, 0.3, 1.3);
    rc.Rb = 0.4;
    rc.obstacle = bc;
    const auto t = series_solve(rc, plane_wave(0.0));
    for (double th : {0.3, 2.0}) {
      const Vec2 rh(std::cos(th), std::sin(th));
      const auto f = series_field_eval(t, {(0.4 + 1e-10) * rh}, true);
      const cplx v = f.value[0], dv = f.grad[0][0] * rh.x() + f.grad[0][1] * rh.y();
      const cplx res = bc.type == ObstacleType::Dirichlet ? v : dv + kI * bc.effective_rho() * v;
      EXPECT_LT(std::abs(res), 1e-8);
    }
    EXPECT_THROW(series_field_eval(t, {Vec2(0.1, 0.0)}, false), RegionError);
  }
}

TEST(SeriesField, HelmholtzStencil) {
  auto rc = disk(0.5, 1.5, 0.3, 1.5);
  rc.Rb = 0.3;
  rc.obstacle = ObstacleCondition::impedance(0.5);
  const auto t = series_solve(rc, PointSource{Vec2(1.5, 0.5)});
  const cplx k1 = rc.interior_wavenumber();
  for (const auto& [x, kk] : {std::pair<Vec2, cplx>{Vec2(-0.5, 0.3), k1}, {Vec2(1.2, -0.9), cplx(rc.k)}}) {
    auto res = [&](double h) {
      const auto f =
          series_field_eval(t, {x, x + Vec2(h, 0), x - Vec2(h, 0), x + Vec2(0, h), x - Vec2(0, h)}, false);
      return std::abs((f.value[1] + f.value[2] + f.value[3] + f.value[4] - 4.0 * f.value[0]) / (h * h) +
                      kk * kk * f.value[0]);
    };
    EXPECT_NEAR(res(2e-2) / res(1e-2), 4.0, 0.3);
  }
}

TEST(SeriesField, RejectsPointsOnCircles) {
  const auto t = series_solve(disk(2.0, 1.5, 0.0), plane_wave(0.0));
  EXPECT_THROW(series_field_eval(t, {Vec2(1.0, 0.0)}, false), EvaluationError);
}

TEST(Series, RejectsBadConfigs) {
  EXPECT_THROW(series_solve(disk(2.0, 1.5, 0.0), PointSource{Vec2(0.5, 0.0)}), ValidationError);
  auto rc = disk(2.0, 1.5, 0.0);
  rc.Rb = 1.2;
  EXPECT_THROW(series_solve(rc, plane_wave(0.0)), ValidationError);
  EXPECT_THROW(series_solve(disk(2.0, 1.5, cplx(0.0, 0.2)), plane_wave(0.0)), ValidationError);
}

TEST(Series, FourierGammaWithZeroBandMatchesConstant) {
  auto a = disk(2.0, 1.5, 0.3);
  auto b = a;
  b.gamma = GammaProfile::from_fourier({0.0, 0.3, 0.0});
  const auto ta = series_solve(a, plane_wave(0.7)), tb = series_solve(b, plane_wave(0.7));
  const auto angles = equispaced_angles(16);
  EXPECT_LT(relative_l2(series_far_field(tb, angles).values, series_far_field(ta, angles).values), 1e-13);
}

// Engine agreement, one case per incidence type and layout.
TEST(OracleVsForward, FarFieldAgreement) {
  struct Case {
    RadialConfig rc;
    Incidence inc;
    double tol;
  };
  auto with_ob = [](RadialConfig rc, ObstacleCondition bc) {
    rc.Rb = 0.4;
    rc.obstacle = bc;
    return rc;
  };
  RadialConfig fourier = disk(1.0, 1.5, 0.0, 2.0);
  fourier.gamma = GammaProfile::from_cos_sin({0.3, 0.1}, {});
  const std::vector<Case> cases = {
      {disk(2.0, 1.5, 0.3, 2.0), plane_wave(0.5), 1e-6},
      {with_ob(disk(0.5, 1.5, cplx(0.0, -0.2), 2.0), ObstacleCondition::impedance(0.5)), plane_wave(1.0), 1e-6},
      {with_ob(disk(2.0, 1.5, 0.3, 2.0), ObstacleCondition::dirichlet()), PointSource{Vec2(1.6, 0.4)}, 1e-5},
      {disk(2.0, 1.5, 0.3, 2.0), Dipole{Vec2(-0.5, 1.5), Vec2(0.0, 1.0)}, 1e-5},
      {fourier, plane_wave(2.0), 1e-6},
  };
  const auto angles = equispaced_angles(64);
  for (const auto& c : cases) {
    const auto ref = series_far_field(series_solve(c.rc, c.inc), angles);
    const auto got = far_field(solve_forward(to_scatterer(c.rc, 192, 96), c.inc, {false}), angles);
    EXPECT_LE(relative_l2(got.values, ref.values), c.tol);
  }
}
