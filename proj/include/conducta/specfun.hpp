// Bessel/Hankel functions of integer order and the planar fundamental
// solutions of the Helmholtz and Laplace operators.
//
// J_m is obtained by Miller's backward recurrence (run as a ratio
// recurrence so it never overflows), normalized with the Neumann identity
// J_0 + 2 sum J_2k = 1.  Y_0 and Y_1 come from the Neumann-type expansions
//
//   Y_0 = (2/pi)(ln(z/2)+gamma) J_0 - (4/pi) sum_k (-1)^k J_2k / k
//   Y_1 = (2/pi)[(ln(z/2)+gamma) J_1 - J_0/z]
//         + (2/pi) sum_k (-1)^k (J_2k-1 - J_2k+1) / k
//
// and higher Y_m by forward recurrence.  Everything works for complex
// arguments with Re z > 0, which is what lossy interior media need.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace conducta {

using cplx = std::complex<double>;
using Vec2 = Eigen::Vector2d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kEulerGamma = 0.5772156649015329;
inline constexpr cplx kI{0.0, 1.0};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {

// Start order for the backward recurrence: well past the turning point.
inline int miller_start(double abs_z, int max_order) {
  const double base = std::max(static_cast<double>(max_order), abs_z);
  int start = static_cast<int>(base + 24.0 + 10.0 * std::cbrt(abs_z + 1.0));
  return start + (start & 1);
}

// ratio[n] = J_n(z)/J_{n-1}(z) for n = 1..start, by the backward recurrence
// J_{n-1}/J_n = 2n/z - J_{n+1}/J_n.
inline std::vector<cplx> bessel_j_ratios(cplx z, int start) {
  std::vector<cplx> ratio(static_cast<std::size_t>(start) + 2, cplx{0.0});
  cplx next{0.0};
  for (int n = start; n >= 1; --n) {
    const cplx denom = 2.0 * static_cast<double>(n) / z - next;
    next = 1.0 / denom;
    ratio[static_cast<std::size_t>(n)] = next;
  }
  return ratio;
}

}  // namespace detail

/// J_0..J_max_order at complex z (z != 0).
inline std::vector<cplx> bessel_j_sequence(cplx z, int max_order) {
  if (z == cplx{0.0}) {
    std::vector<cplx> out(static_cast<std::size_t>(max_order) + 1, cplx{0.0});
    out[0] = 1.0;
    return out;
  }
  const int start = detail::miller_start(std::abs(z), max_order + 2);
  const auto ratio = detail::bessel_j_ratios(z, start);
  // Products P_m = J_m/J_0; the normalization sum decides J_0.
  std::vector<cplx> prod(static_cast<std::size_t>(start) + 1);
  prod[0] = 1.0;
  cplx norm{1.0};
  for (int m = 1; m <= start; ++m) {
    prod[m] = prod[m - 1] * ratio[m];
    if (m % 2 == 0) norm += 2.0 * prod[m];
  }
  const cplx j0 = 1.0 / norm;
  std::vector<cplx> out(static_cast<std::size_t>(max_order) + 1);
  for (int m = 0; m <= max_order; ++m) out[m] = j0 * prod[m];
  return out;
}

/// J_0, J_1, Y_0, Y_1 at a single complex argument.
struct Bessel01 {
  cplx j0, j1, y0, y1;
  cplx h0() const { return j0 + kI * y0; }
  cplx h1() const { return j1 + kI * y1; }
};

namespace detail {

// Single backward sweep accumulating the normalization and both Neumann
// sums on the fly; no storage, rescaled against overflow.
template <class T>
Bessel01 bessel01_sweep(T z) {
  const int start = miller_start(std::abs(z), 4);
  T f_next{0.0}, f{1e-30};
  T norm{0.0}, s0{0.0}, s1{0.0};
  T f1{0.0};
  const T two_over_z = T{2.0} / z;
  for (int n = start; n >= 1; --n) {
    // f = f_n, f_next = f_{n+1}; produce f_{n-1}
    const T f_prev = static_cast<double>(n) * two_over_z * f - f_next;
    if (n % 2 == 0) {
      const int k = n / 2;
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      norm += 2.0 * f;
      s0 += sign * f / static_cast<double>(k);
    } else {
      // n = 2k-1 contributes to term k with +, n = 2k+1 to term k with -
      const int k_plus = (n + 1) / 2, k_minus = (n - 1) / 2;
      s1 += ((k_plus % 2 == 0) ? 1.0 : -1.0) * f / static_cast<double>(k_plus);
      if (k_minus >= 1) s1 -= ((k_minus % 2 == 0) ? 1.0 : -1.0) * f / static_cast<double>(k_minus);
    }
    if (n == 1) f1 = f;
    f_next = f;
    f = f_prev;
    if (std::abs(f) > 1e200) {
      const double sc = 1e-200;
      f *= sc; f_next *= sc; norm *= sc; s0 *= sc; s1 *= sc; f1 *= sc;
    }
  }
  norm += f;  // f_0
  const T j0 = f / norm, j1 = f1 / norm;
  const T lg = std::log(z / 2.0) + kEulerGamma;
  const T y0 = (2.0 / kPi) * (lg * j0 - 2.0 * s0 / norm);
  const T y1 = (2.0 / kPi) * (lg * j1 - j0 / z + s1 / norm);
  return {cplx(j0), cplx(j1), cplx(y0), cplx(y1)};
}

}  // namespace detail

inline Bessel01 bessel01(cplx z) {
  if (z == cplx{0.0}) throw DomainError("bessel01: zero argument");
  if (z.imag() == 0.0 && z.real() > 0.0) return detail::bessel01_sweep<double>(z.real());
  return detail::bessel01_sweep<cplx>(z);
}

/// Y_0..Y_max_order by forward recurrence.
inline std::vector<cplx> bessel_y_sequence(cplx z, int max_order) {
  const Bessel01 b = bessel01(z);
  std::vector<cplx> y(static_cast<std::size_t>(max_order) + 1);
  y[0] = b.y0;
  if (max_order >= 1) y[1] = b.y1;
  for (int m = 1; m < max_order; ++m)
    y[m + 1] = 2.0 * static_cast<double>(m) / z * y[m] - y[m - 1];
  return y;
}

/// (J_m(r), Y_m(r)) for real r > 0.
struct BesselJY {
  double j;
  double y;
};

inline BesselJY bessel_jy(int order, double r) {
  if (!(r > 0.0)) throw DomainError("bessel_jy: argument must be positive");
  if (order < 0 || order > 200) throw DomainError("bessel_jy: order outside 0..200");
  const auto j = bessel_j_sequence(cplx{r}, order);
  const auto y = bessel_y_sequence(cplx{r}, order);
  return {j[order].real(), y[order].real()};
}

/// First positive zero of J_0, by bisection on [2, 3].
inline double bessel_j0_first_zero() {
  double lo = 2.0, hi = 3.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (bessel01(cplx{mid}).j0.real() > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Hankel function of the first kind, orders 0..max_order.
inline std::vector<cplx> hankel1_sequence(cplx z, int max_order) {
  const auto j = bessel_j_sequence(z, max_order);
  const auto y = bessel_y_sequence(z, max_order);
  std::vector<cplx> h(j.size());
  for (std::size_t m = 0; m < j.size(); ++m) h[m] = j[m] + kI * y[m];
  return h;
}

/// Logarithmic ladders used where orders run into the thousands and the
/// functions themselves over- or underflow.  log_value[m] = ln f_m(z) on
/// some branch (only differences are ever exponentiated);
/// log_deriv[m] = f'_m(z)/f_m(z).
struct BesselLadder {
  cplx z;
  std::vector<cplx> log_value;
  std::vector<cplx> log_deriv;

  int max_order() const { return static_cast<int>(log_value.size()) - 1; }
};

inline BesselLadder bessel_j_ladder(cplx z, int max_order) {
  if (z == cplx{0.0}) throw DomainError("bessel_j_ladder: zero argument");
  const int start = detail::miller_start(std::abs(z), max_order + 2);
  const auto ratio = detail::bessel_j_ratios(z, start);
  cplx norm{1.0}, prod{1.0};
  for (int m = 1; m <= start; ++m) {
    prod *= ratio[m];
    if (m % 2 == 0) norm += 2.0 * prod;
    if (std::abs(prod) < 1e-300) break;
  }
  BesselLadder out{z, {}, {}};
  out.log_value.resize(static_cast<std::size_t>(max_order) + 1);
  out.log_deriv.resize(static_cast<std::size_t>(max_order) + 1);
  out.log_value[0] = -std::log(norm);
  out.log_deriv[0] = -ratio[1];
  for (int m = 1; m <= max_order; ++m) {
    out.log_value[m] = out.log_value[m - 1] + std::log(ratio[m]);
    out.log_deriv[m] = 1.0 / ratio[m] - static_cast<double>(m) / z;
  }
  return out;
}

inline BesselLadder hankel1_ladder(cplx z, int max_order) {
  const Bessel01 b = bessel01(z);
  BesselLadder out{z, {}, {}};
  out.log_value.resize(static_cast<std::size_t>(max_order) + 1);
  out.log_deriv.resize(static_cast<std::size_t>(max_order) + 1);
  out.log_value[0] = std::log(b.h0());
  cplx sigma = b.h1() / b.h0();  // H_m / H_{m-1}
  out.log_deriv[0] = -sigma;
  for (int m = 1; m <= max_order; ++m) {
    out.log_value[m] = out.log_value[m - 1] + std::log(sigma);
    out.log_deriv[m] = 1.0 / sigma - static_cast<double>(m) / z;
    sigma = 2.0 * static_cast<double>(m) / z - 1.0 / sigma;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fundamental solutions.

struct FundamentalSolutionValue {
  cplx value;
  std::array<cplx, 2> grad;  // gradient in the first argument
};

/// Phi(x,y) = (i/4) H_0^(1)(k|x-y|).
inline FundamentalSolutionValue phi_helmholtz(const Vec2& x, const Vec2& y, cplx k) {
  const Vec2 d = x - y;
  const double r = d.norm();
  if (r == 0.0) throw DomainError("phi_helmholtz: coincident points");
  const Bessel01 b = bessel01(k * r);
  // grad_x (i/4) H0(kr) = -(ik/4) H1(kr) (x-y)/r
  const cplx g = -0.25 * kI * k * b.h1() / r;
  return {0.25 * kI * b.h0(), {g * d.x(), g * d.y()}};
}

inline FundamentalSolutionValue phi_helmholtz(const Vec2& x, const Vec2& y, double k) {
  return phi_helmholtz(x, y, cplx{k});
}

/// Phi_0(x,y) = -(1/2pi) ln|x-y|.
inline FundamentalSolutionValue phi_laplace(const Vec2& x, const Vec2& y) {
  const Vec2 d = x - y;
  const double r2 = d.squaredNorm();
  if (r2 == 0.0) throw DomainError("phi_laplace: coincident points");
  const double value = -std::log(r2) / (4.0 * kPi);
  const double g = -1.0 / (2.0 * kPi * r2);
  return {cplx{value}, {cplx{g * d.x()}, cplx{g * d.y()}}};
}

}  // namespace conducta
