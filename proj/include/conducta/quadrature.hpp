// Periodic quadrature helpers: log-split weights, spectral differentiation,
// trigonometric interpolation, Gauss-Legendre rules.
#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "conducta/specfun.hpp"

namespace conducta {

/// Weights R_d, d = 0..N-1, such that
///   int_0^{2pi} ln(4 sin^2((t_i - tau)/2)) f(tau) dtau ~ sum_j R_{(i-j) mod N} f(t_j)
/// exact for trigonometric polynomials of degree < N/2.
inline std::vector<double> log_split_weights(int n_nodes) {
  const int n = n_nodes / 2;
  std::vector<double> w(n_nodes);
  for (int d = 0; d < n_nodes; ++d) {
    const double s = kPi * d / n;
    double acc = 0.0;
    for (int m = 1; m < n; ++m) acc += std::cos(m * s) / m;
    w[d] = -2.0 * kPi / n * acc - kPi / (double(n) * n) * ((d % 2 == 0) ? 1.0 : -1.0);
  }
  return w;
}

/// Derivative of the trigonometric interpolant at the nodes (even N).
inline Eigen::MatrixXd spectral_diff_matrix(int n_nodes) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
  const double h = 2.0 * kPi / n_nodes;
  for (int i = 0; i < n_nodes; ++i)
    for (int j = 0; j < n_nodes; ++j)
      if (i != j) {
        const double sign = ((i - j) % 2 == 0) ? 1.0 : -1.0;
        d(i, j) = 0.5 * sign / std::tan(0.5 * (i - j) * h);
      }
  return d;
}

/// Fourier coefficients c_m (m = -N/2..N/2, Nyquist term split evenly) of
/// the trigonometric interpolant through samples at t_j = 2 pi j / N.
inline std::vector<cplx> trig_coefficients(const Eigen::VectorXcd& values) {
  const int n = static_cast<int>(values.size());
  const int half = n / 2;
  std::vector<cplx> c(n + 1);
  for (int m = -half; m <= half; ++m) {
    cplx s{0.0};
    const cplx step = std::exp(-kI * (2.0 * kPi * m / n));
    cplx e{1.0};
    for (int j = 0; j < n; ++j) {
      s += values[j] * e;
      e *= step;
    }
    c[m + half] = s / double(n);
  }
  c[0] *= 0.5;
  c[n] *= 0.5;
  return c;
}

inline cplx eval_trig(const std::vector<cplx>& coeffs, double t) {
  const int half = static_cast<int>(coeffs.size() / 2);
  cplx s{0.0};
  for (int m = -half; m <= half; ++m) s += coeffs[m + half] * std::exp(kI * (m * t));
  return s;
}

/// Resample periodic data from N to M equispaced nodes (M >= N).
inline Eigen::VectorXcd trig_resample(const Eigen::VectorXcd& values, int m_nodes) {
  const int n = static_cast<int>(values.size());
  if (m_nodes == n) return values;
  const auto c = trig_coefficients(values);
  const int half = n / 2;
  Eigen::VectorXcd out(m_nodes);
  for (int j = 0; j < m_nodes; ++j) {
    const double t = 2.0 * kPi * j / m_nodes;
    const cplx step = std::exp(kI * t);
    cplx e = std::exp(-kI * (half * t));
    cplx s{0.0};
    for (int k = 0; k <= n; ++k) {
      s += c[k] * e;
      e *= step;
    }
    out[j] = s;
  }
  return out;
}

struct GaussRule {
  std::vector<double> nodes, weights;
};

/// n-point Gauss-Legendre rule on [a, b].
inline GaussRule gauss_legendre(int n, double a = -1.0, double b = 1.0) {
  GaussRule g;
  g.nodes.resize(n);
  g.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    g.nodes[n - 1 - i] = 0.5 * (b - a) * x + 0.5 * (b + a);
    g.weights[n - 1 - i] = 0.5 * (b - a) * w;
  }
  return g;
}

}  // namespace conducta
