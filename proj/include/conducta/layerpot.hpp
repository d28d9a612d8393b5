// Nystrom layer operators S, K, K', T on and between closed curves,
// off-curve potentials and far-field kernels.
//
// Conventions, exterior side +, interior side -:
//   single layer continuous; double layer -> (K +/- 1/2) psi;
//   normal derivative of single layer -> (K' -/+ 1/2) phi; T continuous.
// Self operators use the log-split product rule, T is built from the
// tangential-derivative (Maue) form.  Cross-curve blocks use the trapezoid
// rule.
#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "conducta/geometry.hpp"
#include "conducta/parallel.hpp"
#include "conducta/quadrature.hpp"
#include "conducta/specfun.hpp"

namespace conducta {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

enum class OperatorKind { S, K, Kp, T };

/// Helmholtz kernel at wavenumber k, or the Laplace kernel.
struct Kernel {
  cplx k{1.0};
  bool laplace = false;

  static Kernel helmholtz(cplx k) { return {k, false}; }
  static Kernel static_kernel() { return {cplx{0.0}, true}; }
  cplx k2() const { return laplace ? cplx{0.0} : k * k; }
};

struct BoundaryOperatorMatrix {
  OperatorKind kind;
  Kernel kernel;
  CMatrix matrix;  // target nodes x source nodes
};

/// All four operators of one (source, target) pair.
struct OperatorSet {
  CMatrix S, K, Kp, T;
};

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Values needed per pair: Phi, H1(kr)/r-type factors.  Laplace mode fills
// the analogous static quantities.
inline void pair_kernel(const Kernel& ker, double r, cplx& phi, cplx& g, cplx& gp, cplx& j0, cplx& j1r) {
  if (ker.laplace) {
    phi = -std::log(r) / (2.0 * kPi);
    // grad_y Phi0 = (x-y) / (2 pi r^2)
    g = 1.0 / (2.0 * kPi * r * r);
    gp = -2.0 / (2.0 * kPi * r * r * r);
    j0 = 1.0;
    j1r = 0.0;
    return;
  }
  const cplx z = ker.k * r;
  const Bessel01 b = bessel01(z);
  phi = 0.25 * kI * b.h0();
  // grad_y Phi = (ik/4) H1(kr)/r (x-y)
  g = 0.25 * kI * ker.k * b.h1() / r;
  // d/dr of (ik/4) H1(kr)/r
  gp = 0.25 * kI * ker.k * (ker.k * b.h0() / r - 2.0 * b.h1() / (r * r));
  j0 = b.j0;
  j1r = b.j1 / r;
}

}  // namespace detail

/// Self operators on one curve.
inline OperatorSet assemble_self(const BoundaryCurve& c, const Kernel& ker, bool with_T = true) {
  const int n = c.size();
  const double w = 2.0 * kPi / n;
  const auto R = log_split_weights(n);
  OperatorSet out;
  out.S.resize(n, n);
  out.K.resize(n, n);
  out.Kp.resize(n, n);
  const double inv4pi = 1.0 / (4.0 * kPi);
#pragma omp parallel for schedule(dynamic, 8) num_threads(thread_count())
  for (int i = 0; i < n; ++i) {
    const Vec2 xi = c.point(i);
    const Vec2 ni = c.normal(i);
    for (int j = 0; j < n; ++j) {
      const double spj = c.speed(j);
      const double rw = R[(i - j + n) % n];
      if (i == j) {
        const double spi = c.speed(i);
        const double kdiag = inv4pi * ni.dot(c.d2(i)) / spi;
        cplx s2;
        if (ker.laplace)
          s2 = -std::log(spi) / (2.0 * kPi) * spi;
        else
          s2 = (0.25 * kI - (kEulerGamma + std::log(ker.k * spi / 2.0)) / (2.0 * kPi)) * spi;
        out.S(i, i) = rw * (-inv4pi * spi) + w * s2;
        out.K(i, i) = w * kdiag;
        out.Kp(i, i) = w * kdiag;
        continue;
      }
      const Vec2 d = xi - c.point(j);
      const double r = d.norm();
      const double lg = std::log(4.0 * std::pow(std::sin(0.5 * (c.param(i) - c.param(j))), 2));
      cplx phi, g, gp, j0, j1r;
      detail::pair_kernel(ker, r, phi, g, gp, j0, j1r);
      const double dn_src = c.normal(j).dot(d);   // nu(y).(x-y)
      const double dn_tgt = -ni.dot(d);            // nu(x).(y-x)
      // S
      const cplx s = phi * spj;
      const cplx s1 = -inv4pi * j0 * spj;
      out.S(i, j) = rw * s1 + w * (s - s1 * lg);
      if (ker.laplace) {
        out.K(i, j) = w * g * dn_src * spj;
        out.Kp(i, j) = w * g * dn_tgt * spj;
      } else {
        const cplx k1f = -inv4pi * ker.k * j1r * spj;
        const cplx kv = g * dn_src * spj, kpv = g * dn_tgt * spj;
        out.K(i, j) = rw * k1f * dn_src + w * (kv - k1f * dn_src * lg);
        out.Kp(i, j) = rw * k1f * dn_tgt + w * (kpv - k1f * dn_tgt * lg);
      }
    }
  }
  if (with_T) {
    const Eigen::MatrixXd D = spectral_diff_matrix(n);
    Eigen::VectorXd inv_sp(n), nx(n), ny(n);
    for (int i = 0; i < n; ++i) {
      inv_sp[i] = 1.0 / c.speed(i);
      nx[i] = c.normal(i).x();
      ny[i] = c.normal(i).y();
    }
    const CMatrix Ds = (inv_sp.asDiagonal() * D).cast<cplx>();
    out.T = Ds * out.S * Ds;
    if (!ker.laplace) {
      const CMatrix tx = nx.cast<cplx>().asDiagonal() * out.S * nx.cast<cplx>().asDiagonal();
      const CMatrix ty = ny.cast<cplx>().asDiagonal() * out.S * ny.cast<cplx>().asDiagonal();
      out.T += ker.k2() * (tx + ty);
    }
  }
  return out;
}

/// Operators from a source curve to a distinct target curve.
inline OperatorSet assemble_cross(const BoundaryCurve& src, const BoundaryCurve& tgt, const Kernel& ker) {
  const int ns = src.size(), nt = tgt.size();
  const double w = 2.0 * kPi / ns;
  OperatorSet out;
  out.S.resize(nt, ns);
  out.K.resize(nt, ns);
  out.Kp.resize(nt, ns);
  out.T.resize(nt, ns);
  bool coincident = false;
#pragma omp parallel for schedule(dynamic, 8) num_threads(thread_count())
  for (int i = 0; i < nt; ++i) {
    const Vec2 xi = tgt.point(i);
    const Vec2 nxv = tgt.normal(i);
    for (int j = 0; j < ns; ++j) {
      const Vec2 d = xi - src.point(j);
      const double r = d.norm();
      if (r == 0.0) {
        coincident = true;
        continue;
      }
      cplx phi, g, gp, j0, j1r;
      detail::pair_kernel(ker, r, phi, g, gp, j0, j1r);
      const Vec2 nyv = src.normal(j);
      const double sp = src.speed(j) * w;
      const double dy = nyv.dot(d), dx = nxv.dot(d);
      out.S(i, j) = phi * sp;
      out.K(i, j) = g * dy * sp;
      out.Kp(i, j) = -g * dx * sp;
      out.T(i, j) = (g * nxv.dot(nyv) + gp * dx * dy / r) * sp;
    }
  }
  if (coincident) throw GeometryError("source and target curves share a point");
  return out;
}

inline BoundaryOperatorMatrix assemble_operator(OperatorKind kind, const BoundaryCurve& src,
                                                const BoundaryCurve& tgt, const Kernel& ker) {
  const bool same = (&src == &tgt);
  OperatorSet set = same ? assemble_self(src, ker, kind == OperatorKind::T) : assemble_cross(src, tgt, ker);
  BoundaryOperatorMatrix out{kind, ker, {}};
  switch (kind) {
    case OperatorKind::S: out.matrix = std::move(set.S); break;
    case OperatorKind::K: out.matrix = std::move(set.K); break;
    case OperatorKind::Kp: out.matrix = std::move(set.Kp); break;
    case OperatorKind::T: out.matrix = std::move(set.T); break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Off-curve evaluation.

enum class PotentialKind { Single, Double };

struct FieldValues {
  CVector value;
  std::vector<std::array<cplx, 2>> grad;  // empty unless requested
};

namespace detail {

inline void add_source(PotentialKind kind, const Kernel& ker, const Vec2& x, const Vec2& y, const Vec2& ny,
                       cplx q, bool grad, cplx& val, std::array<cplx, 2>& gr) {
  const Vec2 d = x - y;
  const double r = d.norm();
  if (r == 0.0) throw EvaluationError("evaluation point lies on the source curve");
  cplx phi, g, gp, j0, j1r;
  pair_kernel(ker, r, phi, g, gp, j0, j1r);
  if (kind == PotentialKind::Single) {
    val += phi * q;
    if (grad) {
      // grad_x Phi = -g (x-y)
      gr[0] -= g * d.x() * q;
      gr[1] -= g * d.y() * q;
    }
  } else {
    const double dy = ny.dot(d);
    val += g * dy * q;
    if (grad) {
      const cplx a = gp * dy / r;
      gr[0] += (a * d.x() + g * ny.x()) * q;
      gr[1] += (a * d.y() + g * ny.y()) * q;
    }
  }
}

// Density as a trigonometric polynomial, evaluable anywhere on the curve.
struct DensityInterpolant {
  std::vector<cplx> coeffs;
  int half = 0;

  explicit DensityInterpolant(const CVector& v) : coeffs(trig_coefficients(v)), half(int(v.size()) / 2) {}

  cplx operator()(double t) const {
    const cplx z = std::exp(kI * t);
    const cplx zi = std::conj(z);
    cplx s = coeffs[half], zp{1.0}, zm{1.0};
    for (int m = 1; m <= half; ++m) {
      zp *= z;
      zm *= zi;
      s += coeffs[half + m] * zp + coeffs[half - m] * zm;
    }
    return s;
  }
};

inline const GaussRule& panel_rule() {
  static const GaussRule g = gauss_legendre(16);
  return g;
}

// Adaptive Gauss panels on [a, b]: a panel is accepted once the target is
// at least 0.6 panel lengths from all of its nodes.
inline void panel_integrate(PotentialKind kind, const BoundaryCurve& c, const DensityInterpolant& dens,
                            const Vec2& x, const Kernel& ker, bool grad, double a, double b, int depth,
                            cplx& val, std::array<cplx, 2>& gr) {
  const GaussRule& g = panel_rule();
  const int q = static_cast<int>(g.nodes.size());
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  std::array<CurveJet, 16> jets;
  double len = 0.0, dmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < q; ++i) {
    jets[i] = evaluate_shape(c.shape(), mid + half * g.nodes[i]);
    len += half * g.weights[i] * jets[i].dx.norm();
    dmin = std::min(dmin, (x - jets[i].x).norm());
  }
  if (dmin < 0.6 * len && depth < 48) {
    panel_integrate(kind, c, dens, x, ker, grad, a, mid, depth + 1, val, gr);
    panel_integrate(kind, c, dens, x, ker, grad, mid, b, depth + 1, val, gr);
    return;
  }
  for (int i = 0; i < q; ++i) {
    const double t = mid + half * g.nodes[i];
    const double sp = jets[i].dx.norm();
    const Vec2 ny(jets[i].dx.y() / sp, -jets[i].dx.x() / sp);
    add_source(kind, ker, x, jets[i].x, ny, dens(t) * (half * g.weights[i] * sp), grad, val, gr);
  }
}

}  // namespace detail

/// Single or double layer potential of `density` (nodal values on `curve`)
/// at off-curve points.  Points closer than six node spacings use adaptive
/// Gauss panels on the analytic curve with the interpolated density.
inline FieldValues eval_potential(PotentialKind kind, const CVector& density, const BoundaryCurve& curve,
                                  const std::vector<Vec2>& points, const Kernel& ker, bool with_gradient) {
  const int np = static_cast<int>(points.size());
  const int n = curve.size();
  FieldValues out;
  out.value = CVector::Zero(np);
  if (with_gradient) out.grad.assign(np, {cplx{0.0}, cplx{0.0}});
  double hmax = 0.0;
  for (int j = 0; j < n; ++j) hmax = std::max(hmax, curve.speed(j));
  hmax *= 2.0 * kPi / n;
  std::vector<char> near(np);
  bool any_near = false;
  for (int p = 0; p < np; ++p) {
    const double dist = curve.min_distance_to(points[p]);
    if (dist == 0.0) throw EvaluationError("evaluation point lies on the source curve");
    near[p] = dist < 6.0 * hmax;
    any_near = any_near || near[p];
  }
  std::unique_ptr<detail::DensityInterpolant> interp;
  if (any_near) interp = std::make_unique<detail::DensityInterpolant>(density);
  const int panels = std::max(8, n / 8);
  const double w = 2.0 * kPi / n;
#pragma omp parallel for schedule(dynamic, 4) num_threads(thread_count())
  for (int p = 0; p < np; ++p) {
    cplx v{0.0};
    std::array<cplx, 2> g{cplx{0.0}, cplx{0.0}};
    if (near[p]) {
      for (int k = 0; k < panels; ++k)
        detail::panel_integrate(kind, curve, *interp, points[p], ker, with_gradient, 2.0 * kPi * k / panels,
                                2.0 * kPi * (k + 1) / panels, 0, v, g);
    } else {
      for (int j = 0; j < n; ++j)
        detail::add_source(kind, ker, points[p], curve.point(j), curve.normal(j), density[j] * (w * curve.speed(j)),
                           with_gradient, v, g);
    }
    out.value[p] = v;
    if (with_gradient) out.grad[p] = g;
  }
  return out;
}

/// Far-field samples under Phi_inf(xhat; y) = exp(-i k xhat.y).
inline CVector far_kernel(PotentialKind kind, const CVector& density, const BoundaryCurve& c,
                          const std::vector<double>& angles, double k) {
  const int n = c.size();
  const double w = 2.0 * kPi / n;
  CVector out = CVector::Zero(static_cast<int>(angles.size()));
  for (std::size_t a = 0; a < angles.size(); ++a) {
    const Vec2 xh(std::cos(angles[a]), std::sin(angles[a]));
    cplx s{0.0};
    for (int j = 0; j < n; ++j) {
      const cplx e = std::exp(-kI * (k * xh.dot(c.point(j))));
      const cplx f = (kind == PotentialKind::Single) ? e : -kI * k * xh.dot(c.normal(j)) * e;
      s += f * density[j] * (w * c.speed(j));
    }
    out[static_cast<int>(a)] = s;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Jump-relation audit.

struct JumpResiduals {
  double single_continuity = 0.0;    // |S+ - S-| and |S+- - S phi|
  double double_exterior = 0.0;      // |D+ - (K + 1/2) psi|
  double double_interior = 0.0;      // |D- - (K - 1/2) psi|
  double normal_single_exterior = 0.0;  // |dS+ - (K' - 1/2) phi|
  double normal_single_interior = 0.0;  // |dS- - (K' + 1/2) phi|
  double normal_double = 0.0;        // |dD+- - T psi|

  double max() const {
    return std::max({single_continuity, double_exterior, double_interior, normal_single_exterior,
                     normal_single_interior, normal_double});
  }
};

/// One-sided limits by polynomial extrapolation of off-curve values along
/// the normal, compared with the on-curve operators.  `stride` selects the
/// audited nodes.
inline JumpResiduals apply_jump_relations(const BoundaryCurve& c, const CVector& density, const Kernel& ker,
                                          int stride = 16, double rel_step = 0.002) {
  const OperatorSet ops = assemble_self(c, ker, true);
  const CVector s_on = ops.S * density, k_on = ops.K * density, kp_on = ops.Kp * density, t_on = ops.T * density;
  const int levels = 6;
  const double step = rel_step * c.diameter() / 2.0;
  std::vector<int> nodes;
  for (int i = 0; i < c.size(); i += stride) nodes.push_back(i);
  std::vector<Vec2> pts;
  for (int side : {+1, -1})
    for (int i : nodes)
      for (int l = 1; l <= levels; ++l) pts.push_back(c.point(i) + side * (l * step) * c.normal(i));
  const FieldValues sl = eval_potential(PotentialKind::Single, density, c, pts, ker, true);
  const FieldValues dl = eval_potential(PotentialKind::Double, density, c, pts, ker, true);
  // Lagrange weights for extrapolation from l = 1..levels to 0.
  std::vector<double> lw(levels);
  for (int l = 1; l <= levels; ++l) {
    double p = 1.0;
    for (int m = 1; m <= levels; ++m)
      if (m != l) p *= double(-m) / double(l - m);
    lw[l - 1] = p;
  }
  JumpResiduals res;
  int idx = 0;
  for (int side : {+1, -1}) {
    for (int i : nodes) {
      cplx sv{0.0}, dv{0.0}, sn{0.0}, dn{0.0};
      for (int l = 0; l < levels; ++l, ++idx) {
        const Vec2& nu = c.normal(i);
        sv += lw[l] * sl.value[idx];
        dv += lw[l] * dl.value[idx];
        sn += lw[l] * (sl.grad[idx][0] * nu.x() + sl.grad[idx][1] * nu.y());
        dn += lw[l] * (dl.grad[idx][0] * nu.x() + dl.grad[idx][1] * nu.y());
      }
      res.single_continuity = std::max(res.single_continuity, std::abs(sv - s_on[i]));
      res.normal_double = std::max(res.normal_double, std::abs(dn - t_on[i]));
      if (side > 0) {
        res.double_exterior = std::max(res.double_exterior, std::abs(dv - (k_on[i] + 0.5 * density[i])));
        res.normal_single_exterior =
            std::max(res.normal_single_exterior, std::abs(sn - (kp_on[i] - 0.5 * density[i])));
      } else {
        res.double_interior = std::max(res.double_interior, std::abs(dv - (k_on[i] - 0.5 * density[i])));
        res.normal_single_interior =
            std::max(res.normal_single_interior, std::abs(sn - (kp_on[i] + 0.5 * density[i])));
      }
    }
  }
  return res;
}

}  // namespace conducta
