// Separation-of-variables solution for a disk of radius R centred at the
// origin, optionally with a concentric obstacle of radius Rb.
//
// Per angular mode the transmission conditions reduce to a scalar equation
// for the boundary trace f_m = v_m(R) = u_m(R):
//
//   (E_m - lambda I_m) f_m - (gamma * f)_m = E_m u^i_m - d_r u^i_m,
//
// with E_m = k H'_m/H_m(kR) the exterior and I_m the interior
// Dirichlet-to-Neumann ratio (obstacle folded in).  A trigonometric gamma
// couples neighbouring modes through a banded system.
//
// Radial functions are stored normalised at r = R, so nothing overflows for
// orders in the tens of thousands:
//   u^s = sum_m a_m H_m(kr)/H_m(kR) e^{im theta}
//   v   = sum_m [b_m J_m(k1 r)/J_m(k1 R) + c_m H_m(k1 r)/H_m(k1 R)] e^{im theta}
#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "conducta/forward.hpp"
#include "conducta/geometry.hpp"
#include "conducta/specfun.hpp"

namespace conducta {

struct RadialConfig {
  double R = 1.0;
  std::optional<double> Rb;  // concentric obstacle radius
  double k = 1.0;
  double lambda = 1.0;
  cplx n{1.0};
  GammaProfile gamma;  // in the polar angle
  ObstacleCondition obstacle = ObstacleCondition::neumann();

  cplx interior_wavenumber() const {
    cplx kint = k * std::sqrt(n / lambda);
    if (kint.imag() < 0.0) kint = -kint;
    return kint;
  }
};

/// The same scatterer as a boundary-integral configuration.
inline ScattererConfig to_scatterer(const RadialConfig& rc, int n_outer, int n_obstacle = 0) {
  ScattererConfig cfg;
  cfg.outer = make_curve(CircleShape{rc.R, Vec2::Zero()}, n_outer);
  if (rc.Rb) {
    cfg.obstacles.push_back(make_curve(CircleShape{*rc.Rb, Vec2::Zero()}, n_obstacle > 0 ? n_obstacle : n_outer / 2));
    cfg.obstacle_conditions.push_back(rc.obstacle);
  }
  cfg.k = rc.k;
  cfg.lambda = rc.lambda;
  cfg.n = rc.n;
  cfg.gamma = rc.gamma;
  return cfg;
}

/// Radial description of a concentric-disk scatterer; throws when the
/// geometry is not a disk (optionally with one concentric circular obstacle).
inline RadialConfig radial_from_scatterer(const ScattererConfig& cfg) {
  auto bad = [](const std::string& msg) { return ValidationError({{"geometry", -1, msg}}); };
  const auto* outer = std::get_if<CircleShape>(&cfg.outer.shape());
  if (!outer) throw bad("series engine needs a circular outer boundary");
  const double tol = 1e-12 * outer->radius;
  if (outer->center.norm() > tol) throw bad("series engine needs a disk centred at the origin");
  RadialConfig rc;
  rc.R = outer->radius;
  rc.k = cfg.k;
  rc.lambda = cfg.lambda;
  rc.n = cfg.n;
  rc.gamma = cfg.gamma;
  if (cfg.obstacles.size() > 1) throw bad("series engine supports at most one obstacle");
  if (cfg.obstacles.size() == 1) {
    const auto* ob = std::get_if<CircleShape>(&cfg.obstacles[0].shape());
    if (!ob || ob->center.norm() > tol) throw bad("series engine needs a concentric circular obstacle");
    rc.Rb = ob->radius;
    if (!cfg.obstacle_conditions.empty()) rc.obstacle = cfg.obstacle_conditions[0];
  }
  return rc;
}

inline void validate_radial(const RadialConfig& rc) {
  std::vector<ValidationIssue> issues;
  if (!(rc.R > 0.0)) issues.push_back({"sign", -1, "outer radius must be positive"});
  if (rc.Rb && !(*rc.Rb > 0.0 && *rc.Rb < rc.R))
    issues.push_back({"containment", 0, "obstacle radius must satisfy 0 < Rb < R"});
  if (!issues.empty()) throw ValidationError(std::move(issues));
  validate_scatterer(to_scatterer(rc, 64, 32));
}

struct ModeTable {
  RadialConfig config;
  Incidence incidence;
  int M = 0;                  // modes -M..M, stored at index m + M
  std::vector<cplx> a, b, c;  // see header comment
  std::vector<cplx> f;        // total trace at r = R
  std::vector<cplx> uinc;     // incident trace at r = R
  std::vector<cplx> log_q;    // ln(c_m / b_m), obstacle only
  std::vector<cplx> log_h_outer;  // ln H_|m|(kR)
  std::vector<cplx> log_j1_R, log_h1_R;  // ln J_m(k1 R), ln H_m(k1 R) for m = 0..M (H only with an obstacle)

  int index(int m) const { return m + M; }
};

namespace detail {

using lcplx = std::complex<long double>;

// Incident trace coefficient u^i_m(R) and its radial log-derivative ratio.
inline cplx incident_mode(const Incidence& inc, int m, double k, const BesselLadder& jR,
                          const std::optional<BesselLadder>& hz, double rho, double psi) {
  const int a = std::abs(m);
  if (auto pw = std::get_if<PlaneWave>(&inc)) {
    const double phi = std::atan2(pw->direction.y(), pw->direction.x());
    return std::pow(kI, a) * std::exp(-kI * (m * phi)) * std::exp(jR.log_value[a]);
  }
  const cplx base = 0.25 * kI * std::exp(-kI * (m * psi)) * std::exp(jR.log_value[a] + hz->log_value[a]);
  if (std::holds_alternative<PointSource>(inc)) return base;
  // grad_x Phi . axis = -grad_z Phi . axis
  const Dipole& dp = std::get<Dipole>(inc);
  const Vec2 rhat(std::cos(psi), std::sin(psi)), that(-std::sin(psi), std::cos(psi));
  return -base * (k * hz->log_deriv[a] * dp.axis.dot(rhat) - kI * (double(m) / rho) * dp.axis.dot(that));
}

inline int source_mode_count(const RadialConfig& rc, const Incidence& inc) {
  const int m0 = static_cast<int>(std::ceil(std::max(rc.k, std::abs(rc.interior_wavenumber())) * rc.R)) + 20;
  if (auto z = source_location(inc)) {
    const double ratio = rc.R / z->norm();
    return std::max(m0, static_cast<int>(std::ceil(std::log(1e-17) / std::log(ratio))) + 20);
  }
  return m0;
}

}  // namespace detail

/// Coefficients for the given incidence.  `M` is a lower bound on the
/// truncation; it is enlarged until the tail of a_m and f_m falls below
/// 1e-14 of the largest coefficient.
inline ModeTable series_solve(const RadialConfig& rc, const Incidence& inc, int M = 0) {
  validate_radial(rc);
  if (auto z = source_location(inc); z && !(z->norm() > rc.R))
    throw ValidationError({{"source-inside-D", -1, "source radius must exceed the disk radius"}});
  if (auto pw = std::get_if<PlaneWave>(&inc); pw && std::abs(pw->direction.norm() - 1.0) > 1e-12)
    throw ValidationError({{"incidence", -1, "direction must be unit"}});

  const double k = rc.k, R = rc.R, lam = rc.lambda;
  const cplx k1 = rc.interior_wavenumber();
  M = std::max({M, detail::source_mode_count(rc, inc), 8});
  const std::optional<Vec2> z = source_location(inc);
  const double rho = z ? z->norm() : 0.0;
  const double psi = z ? std::atan2(z->y(), z->x()) : 0.0;

  for (;;) {
    const BesselLadder jR = bessel_j_ladder(cplx{k * R}, M);
    const BesselLadder hR = hankel1_ladder(cplx{k * R}, M);
    const BesselLadder j1R = bessel_j_ladder(k1 * R, M);
    std::optional<BesselLadder> hz, h1R, j1b, h1b;
    if (z) hz = hankel1_ladder(cplx{k * rho}, M);
    if (rc.Rb) {
      h1R = hankel1_ladder(k1 * R, M);
      j1b = bessel_j_ladder(k1 * *rc.Rb, M);
      h1b = hankel1_ladder(k1 * *rc.Rb, M);
    }
    ModeTable t;
    t.config = rc;
    t.incidence = inc;
    t.M = M;
    const int size = 2 * M + 1;
    t.a.assign(size, 0.0);
    t.b.assign(size, 0.0);
    t.c.assign(size, 0.0);
    t.f.assign(size, 0.0);
    t.uinc.assign(size, 0.0);
    t.log_q.assign(size, cplx{-std::numeric_limits<double>::infinity()});
    t.log_h_outer.assign(size, 0.0);
    t.log_j1_R = j1R.log_value;
    if (h1R) t.log_h1_R = h1R->log_value;

    std::vector<cplx> diag(size), rhs(size);
    for (int m = -M; m <= M; ++m) {
      const int a = std::abs(m), i = m + M;
      const detail::lcplx E = detail::lcplx(k) * detail::lcplx(hR.log_deriv[a]);
      detail::lcplx I;
      if (rc.Rb) {
        const double rb_rho = rc.obstacle.effective_rho();
        cplx ratio{1.0};  // Dirichlet: v(Rb) = 0
        if (rc.obstacle.type != ObstacleType::Dirichlet)
          ratio = (k1 * j1b->log_deriv[a] + kI * rb_rho) / (k1 * h1b->log_deriv[a] + kI * rb_rho);
        t.log_q[i] = std::log(-ratio) + j1b->log_value[a] - h1b->log_value[a] + h1R->log_value[a] - j1R.log_value[a];
        const detail::lcplx q(std::exp(t.log_q[i]));
        I = detail::lcplx(k1) * (detail::lcplx(j1R.log_deriv[a]) + q * detail::lcplx(h1R->log_deriv[a])) /
            (detail::lcplx(1.0L) + q);
      } else {
        I = detail::lcplx(k1) * detail::lcplx(j1R.log_deriv[a]);
      }
      const cplx ui = detail::incident_mode(inc, m, k, jR, hz, rho, psi);
      const detail::lcplx dui = detail::lcplx(ui) * detail::lcplx(k) * detail::lcplx(jR.log_deriv[a]);
      t.uinc[i] = ui;
      t.log_h_outer[i] = hR.log_value[a];
      diag[i] = cplx(E - detail::lcplx(lam) * I);
      rhs[i] = cplx(E * detail::lcplx(ui) - dui);
    }

    const int band = rc.gamma.band();
    if (band == 0) {
      const cplx g0 = rc.gamma.coeff(0);
      for (int i = 0; i < size; ++i) {
        const detail::lcplx den = detail::lcplx(diag[i]) - detail::lcplx(g0);
        if (std::abs(den) <= 1e-13 * (std::abs(diag[i]) + std::abs(g0)))
          throw ResonanceError("series mode " + std::to_string(i - M) + " is singular", 1.0 / 1e-13);
        t.f[i] = cplx(detail::lcplx(rhs[i]) / den);
      }
    } else {
      std::vector<Eigen::Triplet<cplx>> trip;
      for (int i = 0; i < size; ++i) {
        trip.emplace_back(i, i, diag[i] - rc.gamma.coeff(0));
        for (int l = -band; l <= band; ++l) {
          const int j = i - l;
          if (l == 0 || j < 0 || j >= size) continue;
          trip.emplace_back(i, j, -rc.gamma.coeff(l));
        }
      }
      Eigen::SparseMatrix<cplx> A(size, size);
      A.setFromTriplets(trip.begin(), trip.end());
      Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
      lu.compute(A);
      if (lu.info() != Eigen::Success) throw ResonanceError("banded series system is singular", 1e13);
      Eigen::Map<const CVector> bv(rhs.data(), size);
      const CVector x = lu.solve(bv);
      if (lu.info() != Eigen::Success || !x.allFinite()) throw ResonanceError("banded series solve failed", 1e13);
      for (int i = 0; i < size; ++i) t.f[i] = x[i];
    }

    double amax = 0.0, fmax = 0.0, atail = 0.0, ftail = 0.0;
    for (int m = -M; m <= M; ++m) {
      const int i = m + M;
      t.a[i] = t.f[i] - t.uinc[i];
      if (rc.Rb) {
        const cplx q = std::exp(t.log_q[i]);
        t.b[i] = t.f[i] / (1.0 + q);
        t.c[i] = t.b[i] * q;
      } else {
        t.b[i] = t.f[i];
      }
      amax = std::max(amax, std::abs(t.a[i]));
      fmax = std::max(fmax, std::abs(t.f[i]));
      if (std::abs(m) >= M - 2) {
        atail = std::max(atail, std::abs(t.a[i]));
        ftail = std::max(ftail, std::abs(t.f[i]));
      }
    }
    if (atail <= 1e-14 * amax && ftail <= 1e-14 * std::max(fmax, 1e-300)) return t;
    if (M > 400000) throw EvaluationError("series truncation did not converge");
    M = M * 3 / 2;
  }
}

/// u_inf(theta) = -4i sum_m (-i)^|m| a_m / H_|m|(kR) e^{im theta}.
inline FarFieldPattern series_far_field(const ModeTable& t, const std::vector<double>& angles) {
  FarFieldPattern p;
  p.angles = angles;
  p.values = CVector::Zero(static_cast<int>(angles.size()));
  std::vector<cplx> coef(t.a.size());
  for (int m = -t.M; m <= t.M; ++m) {
    const int i = t.index(m);
    coef[i] = t.a[i] == cplx{0.0} ? cplx{0.0}
                                   : -4.0 * kI * std::pow(-kI, std::abs(m)) * std::exp(std::log(t.a[i]) - t.log_h_outer[i]);
  }
  for (std::size_t q = 0; q < angles.size(); ++q) {
    cplx s{0.0};
    for (int m = -t.M; m <= t.M; ++m) s += coef[t.index(m)] * std::exp(kI * (m * angles[q]));
    p.values[static_cast<int>(q)] = s;
  }
  return p;
}

/// Radial mode functions at radius r: value and r-derivative per mode, for
/// the region containing r (scattered outside, total inside).
struct RadialModes {
  Region region = Region::Interior;
  std::vector<cplx> value, deriv;  // index m + M
};

/// Modes above `max_order` (when nonnegative) are left at zero.
inline RadialModes radial_modes(const ModeTable& t, double r, int max_order = -1) {
  const RadialConfig& rc = t.config;
  const int mr = max_order < 0 ? t.M : std::min(t.M, max_order);
  const double tol = 1e-14 * rc.R;
  if (std::abs(r - rc.R) <= tol || (rc.Rb && std::abs(r - *rc.Rb) <= tol))
    throw EvaluationError("series evaluation point lies on a circle");
  RadialModes out;
  const int size = 2 * t.M + 1;
  out.value.assign(size, 0.0);
  out.deriv.assign(size, 0.0);
  if (r > rc.R) {
    out.region = Region::Exterior;
    const BesselLadder h = hankel1_ladder(cplx{rc.k * r}, mr);
    for (int m = -mr; m <= mr; ++m) {
      const int i = t.index(m), a = std::abs(m);
      if (t.a[i] == cplx{0.0}) continue;
      out.value[i] = t.a[i] * std::exp(h.log_value[a] - t.log_h_outer[i]);
      out.deriv[i] = rc.k * h.log_deriv[a] * out.value[i];
    }
    return out;
  }
  if (rc.Rb && r < *rc.Rb) throw RegionError("point lies inside the obstacle");
  const cplx k1 = rc.interior_wavenumber();
  const BesselLadder jr = bessel_j_ladder(k1 * r, mr);
  std::optional<BesselLadder> hr;
  if (rc.Rb) hr = hankel1_ladder(k1 * r, mr);
  for (int m = -mr; m <= mr; ++m) {
    const int i = t.index(m), a = std::abs(m);
    if (t.b[i] == cplx{0.0}) continue;
    // ratios J(k1 r)/J(k1 R) and q H(k1 r)/H(k1 R) stay bounded for Rb < r < R
    const cplx vj = t.b[i] * std::exp(jr.log_value[a] - t.log_j1_R[a]);
    out.value[i] = vj;
    out.deriv[i] = k1 * jr.log_deriv[a] * vj;
    if (rc.Rb) {
      const cplx vh = t.b[i] * std::exp(t.log_q[i] + hr->log_value[a] - t.log_h1_R[a]);
      out.value[i] += vh;
      out.deriv[i] += k1 * hr->log_deriv[a] * vh;
    }
  }
  return out;
}

/// Fields at points off both circles: u^s outside, v in the annulus.
inline RegionFields series_field_eval(const ModeTable& t, const std::vector<Vec2>& points, bool with_gradient) {
  RegionFields out;
  const int np = static_cast<int>(points.size());
  out.region.resize(np);
  out.value = CVector::Zero(np);
  if (with_gradient) out.grad.assign(np, {cplx{0.0}, cplx{0.0}});
  for (int p = 0; p < np; ++p) {
    // the centre itself is replaced by a point 1e-12 R away
    const Vec2 x = points[p].norm() < 1e-12 * t.config.R ? Vec2(1e-12 * t.config.R, 0.0) : points[p];
    const double r = x.norm();
    const RadialModes md = radial_modes(t, r);
    out.region[p] = md.region;
    const double th = std::atan2(x.y(), x.x());
    const cplx step = std::exp(kI * th);
    cplx e = std::exp(-kI * (t.M * th));
    cplx v{0.0}, dr{0.0}, dth{0.0};
    for (int m = -t.M; m <= t.M; ++m) {
      const int i = t.index(m);
      v += md.value[i] * e;
      dr += md.deriv[i] * e;
      dth += kI * double(m) * md.value[i] * e;
      e *= step;
    }
    out.value[p] = v;
    if (with_gradient) {
      const double c = std::cos(th), s = std::sin(th);
      const cplx dt = dth / r;
      out.grad[p] = {dr * c - dt * s, dr * s + dt * c};
    }
  }
  return out;
}

/// Relative L2 distance of two patterns on the same angles; absolute when the
/// reference vanishes.
inline double relative_l2(const CVector& test, const CVector& ref) {
  const double nref = ref.norm();
  const double diff = (test - ref).norm();
  return nref > 1e-12 * std::sqrt(double(ref.size())) ? diff / nref : diff;
}

}  // namespace conducta
