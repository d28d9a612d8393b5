// Interior transmission problems on a disk: feasibility of the coercive
// splitting for the lambda != 1 problem, the six well-posedness conditions
// for the lambda = 1 problem, and a Fourier x radial-polynomial Galerkin
// estimate of the constants and of the coercivity of the variational form
//
//   B(u,u) = int 1/(n2-n1) (Du + k^2 n1 u)(Du + k^2 n2 u)^* + int_bdry k^2/eta |d_nu u|^2.
//
// Coefficients are constants (inf = sup), but the report carries both.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conducta/quadrature.hpp"
#include "conducta/specfun.hpp"

namespace conducta {

class ItpError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Coercive splitting for div(lambda_i grad) - b_i.

struct EpsilonInterval {
  double lo = 0.0, hi = 0.0;
  bool feasible() const { return lo < hi; }
};

struct SplittingReport {
  EpsilonInterval primary;
  bool swapped_tried = false;
  EpsilonInterval swapped;  // roles of the two media exchanged
  bool feasible() const { return primary.feasible() || (swapped_tried && swapped.feasible()); }
};

/// Admissible eps: eps < min(b2, 1), eps b1 > Q, eps rho > Q with
/// Q = ((1 + b2)/2)^2 and rho = inf(lambda1/lambda2).
inline EpsilonInterval splitting_interval(double b1, double b2, double rho) {
  if (!(b1 > 0.0) || !(b2 > 0.0) || !(rho > 0.0)) throw ItpError("b1, b2 and the lambda ratio must be positive");
  const double q = 0.25 * (1.0 + b2) * (1.0 + b2);
  return {std::max(q / b1, q / rho), std::min(b2, 1.0)};
}

/// `rho_sup` is sup(lambda1/lambda2), needed only for the exchanged retry.
inline SplittingReport lemma31_feasible(double b1, double b2, double rho_inf, std::optional<double> rho_sup = {}) {
  SplittingReport r;
  r.primary = splitting_interval(b1, b2, rho_inf);
  if (!r.primary.feasible() && rho_inf <= 1.0) {
    r.swapped_tried = true;
    r.swapped = splitting_interval(b2, b1, 1.0 / rho_sup.value_or(rho_inf));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Constants.

inline double dirichlet_eig_disk(double R) {
  if (!(R > 0.0)) throw ItpError("radius must be positive");
  const double j = bessel_j0_first_zero() / R;
  return j * j;
}

namespace detail {

// Per-mode Galerkin forms for phi_j = r^a (1-s)^p p_j(s) e^{i m theta},
// s = (r/R)^2, with the common factor R^{2a} dropped.
struct ModeForms {
  Eigen::MatrixXd lap;    // int |Delta u|^2
  Eigen::MatrixXd grad;   // int |grad u|^2
  Eigen::MatrixXd mass;   // int |u|^2
  Eigen::MatrixXd bdry;   // int_bdry |d_nu u|^2
};

inline ModeForms mode_forms(int a, int nrad, int p, double R) {
  const GaussRule g = gauss_legendre(nrad + a / 2 + 8, 0.0, 1.0);
  const int nq = static_cast<int>(g.nodes.size());
  Eigen::MatrixXd h(nq, nrad), lh(nq, nrad);
  Eigen::VectorXd hb1(nrad);
  // h(s) = (1-s)^p P_j^{(2p, a)}(x), x = 2s - 1: Jacobi polynomials orthogonal
  // for the weight s^a (1-s)^{2p} keep the Gram matrices well conditioned
  // even for large a.  Derivatives in s by the chain rule.
  const double al = 2.0 * p, be = a;
  auto eval = [&](double s, int j, double& v, double& d1, double& d2) {
    const double x = 2.0 * s - 1.0;
    double p0 = 1.0, dp0 = 0.0, ddp0 = 0.0;
    double p1 = 0.5 * (al - be) + 0.5 * (al + be + 2.0) * x, dp1 = 0.5 * (al + be + 2.0), ddp1 = 0.0;
    double P = p0, dP = dp0, ddP = ddp0;
    if (j >= 1) { P = p1; dP = dp1; ddP = ddp1; }
    for (int n = 2; n <= j; ++n) {
      const double c = 2.0 * n + al + be;
      const double a1 = 2.0 * n * (n + al + be) * (c - 2.0);
      const double a2 = (c - 1.0) * (al * al - be * be);
      const double a3 = (c - 1.0) * c * (c - 2.0);
      const double a4 = 2.0 * (n + al - 1.0) * (n + be - 1.0) * c;
      const double p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
      const double dp2 = ((a2 + a3 * x) * dp1 + a3 * p1 - a4 * dp0) / a1;
      const double ddp2 = ((a2 + a3 * x) * ddp1 + 2.0 * a3 * dp1 - a4 * ddp0) / a1;
      p0 = p1; p1 = p2; dp0 = dp1; dp1 = dp2; ddp0 = ddp1; ddp1 = ddp2;
      P = p2; dP = dp2; ddP = ddp2;
    }
    dP *= 2.0;
    ddP *= 4.0;
    const double w = std::pow(1.0 - s, p);
    const double dw = -p * std::pow(1.0 - s, p - 1);
    const double ddw = p >= 2 ? p * (p - 1) * std::pow(1.0 - s, p - 2) : 0.0;
    v = w * P;
    d1 = dw * P + w * dP;
    d2 = ddw * P + 2.0 * dw * dP + w * ddP;
  };
  for (int q = 0; q < nq; ++q) {
    const double s = g.nodes[q];
    for (int j = 0; j < nrad; ++j) {
      double v, d1, d2;
      eval(s, j, v, d1, d2);
      h(q, j) = v;
      // Delta(r^a h(r^2/R^2) e^{i m theta}) = r^a (4(a+1) h' + 4 s h'') / R^2
      lh(q, j) = (4.0 * (a + 1) * d1 + 4.0 * s * d2) / (R * R);
    }
  }
  for (int j = 0; j < nrad; ++j) {
    double v, d1, d2;
    eval(1.0, j, v, d1, d2);
    // d_r (r^a h) at r = R, divided by R^a
    hb1(j) = (a * v + 2.0 * d1) / R;
  }
  Eigen::VectorXd w(nq);
  for (int q = 0; q < nq; ++q) w(q) = kPi * R * R * g.weights[q] * std::pow(g.nodes[q], a);
  ModeForms f;
  f.lap = lh.transpose() * w.asDiagonal() * lh;
  f.mass = h.transpose() * w.asDiagonal() * h;
  // int |grad u|^2 = -int conj(u) Delta u for u = 0 on the circle
  const Eigen::MatrixXd gsym = -(h.transpose() * w.asDiagonal() * lh);
  f.grad = 0.5 * (gsym + gsym.transpose());
  f.bdry = 2.0 * kPi * R * hb1 * hb1.transpose();
  return f;
}

// Largest / smallest eigenvalue of A x = mu L x for symmetric A, L > 0.
inline Eigen::VectorXd generalized_eigenvalues(const Eigen::MatrixXd& A, const Eigen::MatrixXd& L) {
  // scale to unit diagonal for conditioning
  const Eigen::VectorXd d = L.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd As = d.asDiagonal() * A * d.asDiagonal();
  const Eigen::MatrixXd Ls = d.asDiagonal() * L * d.asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(Ls);
  if (llt.info() != Eigen::Success) throw ItpError("Galerkin subspace is numerically rank deficient");
  const Eigen::MatrixXd Li = llt.matrixL().solve(Eigen::MatrixXd::Identity(Ls.rows(), Ls.cols()));
  const Eigen::MatrixXd C = Li * As * Li.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (C + C.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace detail

/// Galerkin estimate of sup int_bdry |d_nu u|^2 / int |Delta u|^2 over
/// H^2 cap H^1_0 of the disk (a lower estimate of the true supremum).
inline double c1_disk(double R, int angular = 8, int radial = 16) {
  if (!(R > 0.0)) throw ItpError("radius must be positive");
  if (angular < 8 || radial < 16) throw ItpError("c1_disk needs >= 8 angular and >= 16 radial functions");
  double best = 0.0;
  for (int a = 0; a < angular; ++a) {
    const auto f = detail::mode_forms(a, radial, 1, R);
    best = std::max(best, detail::generalized_eigenvalues(f.bdry, f.lap).maxCoeff());
  }
  return best;
}

// ---------------------------------------------------------------------------
// Well-posedness conditions.

struct ItpParameters {
  double k = 1.0;
  double n1_inf = 1.0, n1_sup = 1.0;
  double n2_inf = 1.0, n2_sup = 1.0;
  double eta = 0.0;      // constant
  double R = 1.0;        // disk radius
  double delta1 = 1e-6;  // n_i > delta1, |n1 - n2| > delta1

  static ItpParameters constant(double k, double n1, double n2, double eta, double R) {
    ItpParameters p;
    p.k = k;
    p.n1_inf = p.n1_sup = n1;
    p.n2_inf = p.n2_sup = n2;
    p.eta = eta;
    p.R = R;
    return p;
  }
  double n1() const { return n1_inf; }
  double n2() const { return n2_inf; }
};

struct ConditionResult {
  bool applicable = false;  // sign pattern of n1 - n2 and eta matches
  bool holds = false;
  double margin = -std::numeric_limits<double>::infinity();
};

struct WellPosednessReport {
  std::array<ConditionResult, 6> conditions;  // index c - 1
  double lambda1 = 0.0;
  double c1_upper = 0.0;  // C0 R * safety, used by conditions 3 and 4
  double c1_safety = 1.5;
  double c_prime = 0.0;   // 1 / sup |n1 - n2|
  double eta_margin = 0.0;  // |eta|
  bool admissible = true;   // delta1 requirements
  std::string note;

  bool any() const {
    for (const auto& c : conditions)
      if (c.holds) return true;
    return false;
  }
  int first_holding() const {
    for (int i = 0; i < 6; ++i)
      if (conditions[i].holds) return i + 1;
    return 0;
  }
};

/// C0 = Galerkin value of C1 on the unit disk, cached.
inline double c1_unit_disk() {
  static const double c0 = c1_disk(1.0);
  return c0;
}

inline WellPosednessReport thm33_check(const ItpParameters& p) {
  if (!(p.k > 0.0) || !(p.R > 0.0)) throw ItpError("k and R must be positive");
  WellPosednessReport rep;
  rep.lambda1 = dirichlet_eig_disk(p.R);
  rep.c1_upper = rep.c1_safety * c1_unit_disk() * p.R;
  const double dn_sup = std::max(std::abs(p.n1_sup - p.n2_inf), std::abs(p.n2_sup - p.n1_inf));
  rep.c_prime = 1.0 / dn_sup;
  rep.eta_margin = std::abs(p.eta);
  rep.admissible = p.n1_inf > p.delta1 && p.n2_inf > p.delta1 &&
                   (p.n1_inf - p.n2_sup > p.delta1 || p.n2_inf - p.n1_sup > p.delta1);
  if (!rep.admissible) rep.note = "coefficient bounds violate n_i > delta1, |n1 - n2| > delta1";
  const bool n1_below = p.n1_sup < p.n2_inf, n1_above = p.n1_inf > p.n2_sup;
  const double k2 = p.k * p.k, l1 = rep.lambda1;
  auto simple = [&](double ninf, double nsup) { return l1 * ninf / (nsup * nsup) - k2; };
  auto boundary = [&](double ninf, double nsup) {
    const double c1 = rep.c1_upper, cp = rep.c_prime;
    const double den = cp * std::abs(p.eta) - c1 * k2;
    const double rhs = l1 / (k2 * nsup * nsup) - 1.0 / ninf;
    if (!(den > 0.0)) return -std::numeric_limits<double>::infinity();
    const double x = cp * c1 * k2 / den;
    return std::min(x, rhs - x);
  };
  auto set = [&](int c, bool applicable, double margin) {
    auto& r = rep.conditions[c - 1];
    r.applicable = applicable && rep.admissible;
    if (r.applicable) {
      r.margin = margin;
      r.holds = margin > 0.0;
    }
  };
  set(1, n1_below && p.eta > 0.0, simple(p.n2_inf, p.n2_sup));
  set(2, n1_above && p.eta < 0.0, simple(p.n1_inf, p.n1_sup));
  set(3, n1_above && p.eta > 0.0, boundary(p.n1_inf, p.n1_sup));
  set(4, n1_below && p.eta < 0.0, boundary(p.n2_inf, p.n2_sup));
  set(5, n1_below && p.eta == 0.0, simple(p.n2_inf, p.n2_sup));
  set(6, n1_above && p.eta == 0.0, simple(p.n1_inf, p.n1_sup));
  return rep;
}

/// Largest disk radius for which some condition holds, by geometric scan and
/// bisection.  Every condition family holds on an interval (0, R*).
inline double max_wellposed_radius(double k, double n1, double n2, double eta, double rel_tol = 1e-13) {
  auto ok = [&](double R) { return thm33_check(ItpParameters::constant(k, n1, n2, eta, R)).any(); };
  double lo = 1e-6 / k;
  if (!ok(lo)) {
    while (!ok(lo)) {
      lo *= 0.5;
      if (lo < 1e-300) throw ItpError("no radius satisfies a well-posedness condition");
    }
  }
  double hi = lo * 2.0;
  while (ok(hi)) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > rel_tol * lo) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

struct CoercivityEstimate {
  double bound = 0.0;    // min over the subspace of sign * B(u,u) / ||Delta u||^2
  int worst_mode = 0;
  double sign = 1.0;     // sign(n2 - n1)
};

/// Brute-force coercivity over `angular` Fourier modes x `radial` radial
/// functions; H^2 cap H^1_0 when eta != 0, H^2_0 when eta = 0 (the boundary
/// term is then absent).
inline CoercivityEstimate coercivity_lower_bound(const ItpParameters& p, int angular = 32, int radial = 32) {
  const double n1 = p.n1(), n2 = p.n2(), k2 = p.k * p.k;
  if (n1 == n2) throw ItpError("coercivity form requires n1 != n2");
  CoercivityEstimate est;
  est.sign = n2 > n1 ? 1.0 : -1.0;
  est.bound = std::numeric_limits<double>::infinity();
  const int power = p.eta == 0.0 ? 2 : 1;
  for (int a = 0; a < angular; ++a) {
    const auto f = detail::mode_forms(a, radial, power, p.R);
    // (Du + k^2 n1 u, Du + k^2 n2 u) = lap - k^2 (n1 + n2) grad + k^4 n1 n2 mass
    Eigen::MatrixXd B = (f.lap - k2 * (n1 + n2) * f.grad + k2 * k2 * n1 * n2 * f.mass) / (n2 - n1);
    if (p.eta != 0.0) B += (k2 / p.eta) * f.bdry;
    const double mu = detail::generalized_eigenvalues(est.sign * B, f.lap).minCoeff();
    if (mu < est.bound) {
      est.bound = mu;
      est.worst_mode = a;
    }
  }
  return est;
}

}  // namespace conducta
