// Far-field data: matrices, reciprocity audits, synthesis of point-source
// data from plane waves, and a linear-sampling boundary indicator.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conducta/forward.hpp"

namespace conducta {

class InverseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FarFieldMatrix {
  std::vector<double> observations;  // theta_i
  std::vector<double> incidences;    // angle of d_j
  CMatrix values;                    // u_inf(theta_i; d_j)
  double k = 1.0;
  std::string normalization = kFarFieldNormalization;

  int rows() const { return static_cast<int>(observations.size()); }
  int cols() const { return static_cast<int>(incidences.size()); }
};

inline void validate_far_field_matrix(const FarFieldMatrix& F) {
  std::vector<ValidationIssue> issues;
  auto grid_ok = [](const std::vector<double>& g) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(g[i] >= 0.0 && g[i] < 2.0 * kPi)) return false;
      if (i > 0 && !(g[i] > g[i - 1])) return false;
    }
    return !g.empty();
  };
  if (!grid_ok(F.observations) || !grid_ok(F.incidences))
    issues.push_back({"grid", -1, "angle grids must be strictly increasing in [0, 2 pi)"});
  if (F.values.rows() != F.rows() || F.values.cols() != F.cols())
    issues.push_back({"shape", -1, "matrix shape does not match the angle grids"});
  else if (!F.values.allFinite())
    issues.push_back({"finite", -1, "far-field matrix has non-finite entries"});
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

/// M2 plane-wave solves sharing one factorisation; N > 0 resamples the curves.
inline FarFieldMatrix far_field_matrix(const ScattererConfig& cfg_in, int M1, int M2, int N = 0) {
  if (M1 < 1 || M2 < 1) throw ValidationError({{"grid", -1, "angle counts must be positive"}});
  const ScattererConfig cfg = N > 0 ? with_resolution(cfg_in, N, std::max(16, N / 2 + (N / 2) % 2)) : cfg_in;
  const ForwardSolver solver(cfg, SolveOptions{false});
  FarFieldMatrix F;
  F.observations = equispaced_angles(M1);
  F.incidences = equispaced_angles(M2);
  F.k = cfg.k;
  F.values.resize(M1, M2);
  for (int j = 0; j < M2; ++j)
    F.values.col(j) = far_field(solver.solve(plane_wave(F.incidences[j])), F.observations).values;
  return F;
}

namespace detail {

inline int find_angle(const std::vector<double>& grid, double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double d = std::abs(grid[i] - a);
    if (std::min(d, 2.0 * kPi - d) < 1e-12) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace detail

struct ReciprocityReport {
  double max_abs = 0.0;  // max |F(xhat, d) - F(-d, -xhat)|
  double max_rel = 0.0;  // relative to max |F|
};

inline ReciprocityReport reciprocity_check(const FarFieldMatrix& F) {
  validate_far_field_matrix(F);
  ReciprocityReport r;
  const double scale = F.values.cwiseAbs().maxCoeff();
  for (int i = 0; i < F.rows(); ++i)
    for (int j = 0; j < F.cols(); ++j) {
      const int ip = detail::find_angle(F.observations, F.incidences[j] + kPi);
      const int jp = detail::find_angle(F.incidences, F.observations[i] + kPi);
      if (ip < 0 || jp < 0)
        throw ValidationError({{"grid", -1, "angle grids are not closed under negation"}});
      r.max_abs = std::max(r.max_abs, std::abs(F.values(i, j) - F.values(ip, jp)));
    }
  r.max_rel = scale > 0.0 ? r.max_abs / scale : 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Point-source data from plane-wave data.  Under the normalisation above the
// far field of Phi(., x) scattered, observed at -d, equals u^s(x; d).

struct SynthesisResult {
  std::vector<double> directions;  // d_j of the matrix
  CVector values;                  // estimates of u^s(x; d_j)
  CVector density;                 // Herglotz density g
  double alpha = 0.0;
  double discrepancy = 0.0;        // relative trace mismatch of the Herglotz wave
};

/// Herglotz approximation of Phi(., x) on the outer boundary (values and
/// normal derivatives / k), Tikhonov-regularised to the discrepancy target.
inline SynthesisResult mixed_reciprocity_synthesize(const FarFieldMatrix& F, const BoundaryCurve& boundary,
                                                    const Vec2& x, double target = 1e-3) {
  validate_far_field_matrix(F);
  const double k = F.k;
  if (boundary.contains(x) || boundary.min_distance_to(x) == 0.0)
    throw ValidationError({{"source-inside-D", -1, "synthesis point must lie outside the scatterer"}});
  const int n = boundary.size(), m = F.cols();
  const double wd = 2.0 * kPi / m;
  Eigen::MatrixXcd H(2 * n, m);
  CVector b(2 * n);
  for (int i = 0; i < n; ++i) {
    const Vec2 y = boundary.point(i), nu = boundary.normal(i);
    const double ws = std::sqrt(boundary.speed(i) * 2.0 * kPi / n);
    const auto phi = phi_helmholtz(y, x, k);
    b[i] = ws * phi.value;
    b[n + i] = ws * (phi.grad[0] * nu.x() + phi.grad[1] * nu.y()) / k;
    for (int j = 0; j < m; ++j) {
      const Vec2 d(std::cos(F.incidences[j]), std::sin(F.incidences[j]));
      const cplx e = std::exp(kI * (k * d.dot(y)));
      H(i, j) = ws * wd * e;
      H(n + i, j) = ws * wd * kI * d.dot(nu) * e;
    }
  }
  const Eigen::BDCSVD<Eigen::MatrixXcd> svd(H, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const CVector beta = svd.matrixU().adjoint() * b;
  const double bnorm = b.norm(), outside = std::sqrt(std::max(0.0, bnorm * bnorm - beta.squaredNorm()));
  auto residual = [&](double alpha) {
    double r2 = outside * outside;
    for (int l = 0; l < s.size(); ++l) r2 += std::norm(alpha / (s[l] * s[l] + alpha) * beta[l]);
    return std::sqrt(r2) / bnorm;
  };
  const double s0 = s[0] * s[0];
  double lo = 1e-30 * s0, hi = s0;
  if (residual(lo) > target) throw InverseError("Herglotz discrepancy target not attainable on this direction grid");
  for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-10; ++it) {
    const double mid = std::sqrt(lo * hi);
    (residual(mid) > target ? hi : lo) = mid;
  }
  const double alpha = lo;
  CVector coef(s.size());
  for (int l = 0; l < s.size(); ++l) coef[l] = s[l] / (s[l] * s[l] + alpha) * beta[l];
  SynthesisResult out;
  out.density = svd.matrixV() * coef;
  out.alpha = alpha;
  out.discrepancy = residual(alpha);
  out.directions = F.incidences;
  out.values.resize(m);
  for (int j = 0; j < m; ++j) {
    const int i = detail::find_angle(F.observations, F.incidences[j] + kPi);
    if (i < 0) throw ValidationError({{"grid", -1, "observation grid must contain -d for every d"}});
    out.values[j] = wd * (F.values.row(i) * out.density)(0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear sampling.

struct SearchBox {
  double xmin = -2.0, xmax = 2.0, ymin = -2.0, ymax = 2.0;
  int nx = 81, ny = 81;

  double x(int i) const { return xmin + (xmax - xmin) * i / (nx - 1); }
  double y(int j) const { return ymin + (ymax - ymin) * j / (ny - 1); }
};

struct IndicatorField {
  SearchBox box;
  Eigen::MatrixXd values;  // values(j, i) at (x(i), y(j))
  double alpha = 0.0;
  double sigma_max = 0.0;
};

/// I(z) = 1 / |g_z| with (alpha + A*A) g = A* Phi_inf(., z), A = (2 pi / M) F,
/// alpha = alpha_fraction * sigma_max(A)^2.
inline IndicatorField lsm_indicator(const FarFieldMatrix& F, const SearchBox& box, double alpha_fraction = 1e-4) {
  validate_far_field_matrix(F);
  if (F.rows() != F.cols() || F.observations != F.incidences)
    throw ValidationError({{"grid", -1, "linear sampling needs matching equispaced grids"}});
  if (box.nx < 2 || box.ny < 2 || !(box.xmax > box.xmin) || !(box.ymax > box.ymin))
    throw ValidationError({{"grid", -1, "invalid search box"}});
  const int m = F.rows();
  const double w = 2.0 * kPi / m;
  const Eigen::BDCSVD<Eigen::MatrixXcd> svd(w * F.values, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  IndicatorField out;
  out.box = box;
  out.sigma_max = s[0];
  out.alpha = alpha_fraction * s[0] * s[0];
  out.values.resize(box.ny, box.nx);
  const Eigen::MatrixXcd Uh = svd.matrixU().adjoint();
  Eigen::VectorXd filt(s.size());
  for (int l = 0; l < s.size(); ++l) filt[l] = s[l] / (s[l] * s[l] + out.alpha);
  for (int j = 0; j < box.ny; ++j)
    for (int i = 0; i < box.nx; ++i) {
      const Vec2 z(box.x(i), box.y(j));
      CVector rhs(m);
      for (int q = 0; q < m; ++q)
        rhs[q] = std::exp(-kI * (F.k * (std::cos(F.observations[q]) * z.x() + std::sin(F.observations[q]) * z.y())));
      // g = V diag(filt) U* rhs; V is unitary so |g| needs only the coefficients
      const CVector c = filt.asDiagonal() * (Uh * rhs);
      out.values(j, i) = 1.0 / (std::sqrt(w) * c.norm());
    }
  return out;
}

/// Marching-squares segments of {I = level}.
inline std::vector<std::array<Vec2, 2>> level_set_segments(const IndicatorField& f, double level) {
  std::vector<std::array<Vec2, 2>> segs;
  const SearchBox& b = f.box;
  auto cross = [&](int i0, int j0, int i1, int j1) {
    const double v0 = f.values(j0, i0) - level, v1 = f.values(j1, i1) - level;
    const double s = v0 / (v0 - v1);
    return Vec2(b.x(i0) + s * (b.x(i1) - b.x(i0)), b.y(j0) + s * (b.y(j1) - b.y(j0)));
  };
  for (int j = 0; j + 1 < b.ny; ++j)
    for (int i = 0; i + 1 < b.nx; ++i) {
      // corners counterclockwise from (i, j); edges e0..e3 follow them
      const int ci[4] = {i, i + 1, i + 1, i}, cj[4] = {j, j, j + 1, j + 1};
      bool above[4];
      for (int c = 0; c < 4; ++c) above[c] = f.values(cj[c], ci[c]) > level;
      std::vector<Vec2> pts;
      for (int e = 0; e < 4; ++e) {
        const int a = e, c = (e + 1) % 4;
        if (above[a] != above[c]) pts.push_back(cross(ci[a], cj[a], ci[c], cj[c]));
      }
      if (pts.size() == 2) {
        segs.push_back({pts[0], pts[1]});
      } else if (pts.size() == 4) {
        // saddle: pair by the cell-centre value
        const double centre = 0.25 * (f.values(j, i) + f.values(j, i + 1) + f.values(j + 1, i + 1) + f.values(j + 1, i));
        if ((centre > level) == above[0]) {
          segs.push_back({pts[0], pts[1]});
          segs.push_back({pts[2], pts[3]});
        } else {
          segs.push_back({pts[0], pts[3]});
          segs.push_back({pts[1], pts[2]});
        }
      }
    }
  return segs;
}

/// Contour points of the calibrated level tau = fraction * max I.
inline std::vector<Vec2> lsm_contour(const IndicatorField& f, double fraction = 0.5) {
  std::vector<Vec2> pts;
  for (const auto& s : level_set_segments(f, fraction * f.values.maxCoeff())) {
    pts.push_back(s[0]);
    pts.push_back(0.5 * (s[0] + s[1]));
  }
  return pts;
}

inline double hausdorff_distance(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  auto directed = [](const std::vector<Vec2>& p, const std::vector<Vec2>& q) {
    double h = 0.0;
    for (const auto& x : p) {
      double d = std::numeric_limits<double>::infinity();
      for (const auto& y : q) d = std::min(d, (x - y).squaredNorm());
      h = std::max(h, d);
    }
    return std::sqrt(h);
  };
  return std::max(directed(a, b), directed(b, a));
}

/// Contour against a dense sampling of the true curve.
inline double hausdorff_to_curve(const std::vector<Vec2>& contour, const BoundaryCurve& curve, int samples = 2048) {
  return hausdorff_distance(contour, curve.resampled(samples).points());
}

// ---------------------------------------------------------------------------

/// |F_A - F_B|_F / |F_A|_F on a shared M x M grid.
inline double distinguishability(const ScattererConfig& a, const ScattererConfig& b, int M) {
  const FarFieldMatrix Fa = far_field_matrix(a, M, M), Fb = far_field_matrix(b, M, M);
  const double na = Fa.values.norm();
  const double diff = (Fa.values - Fb.values).norm();
  return na > 0.0 ? diff / na : diff;
}

/// Additive complex Gaussian noise scaled to `level` times the RMS entry.
inline FarFieldMatrix add_relative_noise(FarFieldMatrix F, double level, unsigned long long seed) {
  if (level <= 0.0) return F;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(2.0));
  const double rms = F.values.norm() / std::sqrt(double(F.values.size()));
  for (int j = 0; j < F.values.cols(); ++j)
    for (int i = 0; i < F.values.rows(); ++i) F.values(i, j) += level * rms * cplx(g(rng), g(rng));
  return F;
}

}  // namespace conducta
