// Singular-source experiments: fields excited by sources marching toward a
// boundary point x0 along its normal, compared against the Laplace kernel
// Phi0(x, y) = -ln|x - y| / (2 pi).
#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conducta/forward.hpp"
#include "conducta/oracle.hpp"
#include "conducta/parallel.hpp"
#include "conducta/quadrature.hpp"

namespace conducta {

/// Fit or regression that cannot produce a usable constant.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Engine { Bie, Oracle };

inline double laplace_fundamental(const Vec2& x, const Vec2& y) { return -std::log((x - y).norm()) / (2.0 * kPi); }

inline Vec2 laplace_fundamental_grad(const Vec2& x, const Vec2& y) {
  const Vec2 d = x - y;
  return -d / (2.0 * kPi * d.squaredNorm());
}

// ---------------------------------------------------------------------------
// Sources on the normal ray.

/// Distance to the analytic curve, positive outside.  Nearest node on a fine
/// resampling, then Newton on (x(t) - p) . x'(t) = 0.
inline double signed_distance(const BoundaryCurve& fine, const Vec2& p) {
  int best = 0;
  double dbest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < fine.size(); ++i) {
    const double d = (fine.point(i) - p).squaredNorm();
    if (d < dbest) dbest = d, best = i;
  }
  double t = fine.param(best);
  const double h = 2.0 * kPi / fine.size();
  for (int it = 0; it < 30; ++it) {
    const CurveJet c = evaluate_shape(fine.shape(), t);
    const Vec2 r = c.x - p;
    const double g = r.dot(c.dx), gp = c.dx.squaredNorm() + r.dot(c.ddx);
    double step = gp > 0.0 ? -g / gp : -std::copysign(h, g);
    step = std::clamp(step, -h, h);
    t += step;
    if (std::abs(step) < 1e-15) break;
  }
  const CurveFrame f = curve_frame(fine, t);
  const Vec2 r = p - f.point;
  return std::copysign(r.norm(), r.dot(f.normal));
}

struct SourceRay {
  double t0 = 0.0, delta = 0.0;
  Vec2 x0, normal;
  std::vector<Vec2> sources;  // x_j = x0 + (delta / j) normal, j = 1..J
};

inline SourceRay source_sequence(const BoundaryCurve& curve, double t0, double delta, int J) {
  if (!(delta > 0.0)) throw GeometryError("offset delta must be positive");
  if (J < 1) throw GeometryError("source count must be at least 1");
  const CurveFrame f = curve_frame(curve, t0);
  SourceRay ray{t0, delta, f.point, f.normal, {}};
  // the ray must leave the curve cleanly: check against a dense analytic resampling
  const BoundaryCurve fine = curve.resampled(std::max(curve.size(), 1024));
  for (int j = 1; j <= J; ++j) {
    const double h = delta / j;
    const Vec2 x = f.point + h * f.normal;
    if (signed_distance(fine, x) < 0.5 * h)
      throw GeometryError("containment: source " + std::to_string(j) + " is not clear of the boundary; reduce delta");
    ray.sources.push_back(x);
  }
  return ray;
}

// ---------------------------------------------------------------------------
// Discrete H^1 norms.

struct RegionMesh {
  std::vector<Vec2> points;
  std::vector<double> weights;
  double area() const {
    double a = 0.0;
    for (double w : weights) a += w;
    return a;
  }
};

/// Midpoint rule on nr x nt polar cells of the annulus Rb < |x - c| < R.
inline RegionMesh annulus_mesh(const Vec2& centre, double R, double Rb, int nr, int nt) {
  if (!(R > Rb) || Rb < 0.0 || nr < 1 || nt < 3) throw GeometryError("invalid annulus mesh");
  RegionMesh m;
  const double dr = (R - Rb) / nr, dt = 2.0 * kPi / nt;
  for (int i = 0; i < nr; ++i) {
    const double r = Rb + (i + 0.5) * dr;
    for (int l = 0; l < nt; ++l) {
      const double t = (l + 0.5) * dt;
      m.points.push_back(centre + r * Vec2(std::cos(t), std::sin(t)));
      m.weights.push_back(r * dr * dt);
    }
  }
  return m;
}

namespace detail {

// Gauss panels on [lo, hi], halving toward hi until the last one is below `gap`.
inline GaussRule graded_interval(double lo, double hi, double gap, int order = 16) {
  std::vector<double> cuts{lo};
  double a = lo;
  while (hi - a > gap) {
    a = 0.5 * (a + hi);
    cuts.push_back(a);
  }
  cuts.push_back(hi);
  GaussRule out;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    if (cuts[p + 1] <= cuts[p]) continue;
    const GaussRule g = gauss_legendre(order, cuts[p], cuts[p + 1]);
    out.nodes.insert(out.nodes.end(), g.nodes.begin(), g.nodes.end());
    out.weights.insert(out.weights.end(), g.weights.begin(), g.weights.end());
  }
  return out;
}

}  // namespace detail

/// Tensor mesh of D \ D_b through x(s, t) = c(t) + s (x_D(t) - c(t)), with c(t)
/// the obstacle curve (or the centroid when there is none).  Gauss panels in s
/// are graded toward the outer boundary down to relative width `tail`;
/// the trapezoid rule is used in t.
inline RegionMesh mapped_mesh(const ScattererConfig& cfg, int nt, double tail, int order = 8) {
  if (cfg.obstacles.size() > 1) throw GeometryError("mapped mesh supports at most one obstacle");
  if (nt < 8 || !(tail > 0.0 && tail < 1.0)) throw GeometryError("invalid mapped mesh parameters");
  const bool hole = !cfg.obstacles.empty();
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : cfg.outer.points()) centroid += p;
  centroid /= cfg.outer.size();
  const GaussRule s_rule = detail::graded_interval(0.0, 1.0, tail, order);
  RegionMesh m;
  const double dt = 2.0 * kPi / nt;
  for (int l = 0; l < nt; ++l) {
    const double t = l * dt;
    const CurveJet out = evaluate_shape(cfg.outer.shape(), t);
    CurveJet in{centroid, Vec2::Zero(), Vec2::Zero()};
    if (hole) in = evaluate_shape(cfg.obstacles[0].shape(), t);
    const Vec2 xs = out.x - in.x;
    for (std::size_t q = 0; q < s_rule.nodes.size(); ++q) {
      const double s = s_rule.nodes[q];
      const Vec2 xt = in.dx + s * (out.dx - in.dx);
      const double jac = xs.x() * xt.y() - xs.y() * xt.x();
      if (!(jac > 0.0)) throw GeometryError("mapped mesh folds; the region is not star-shaped for this map");
      m.points.push_back(in.x + s * xs);
      m.weights.push_back(jac * s_rule.weights[q] * dt);
    }
  }
  return m;
}

using FieldEvaluator = std::function<FieldValues(const std::vector<Vec2>&)>;

inline double h1_discrete_norm(const FieldEvaluator& f, const RegionMesh& mesh) {
  const FieldValues v = f(mesh.points);
  if (v.grad.size() != mesh.points.size()) throw EvaluationError("evaluator must return gradients");
  double s = 0.0;
  for (std::size_t p = 0; p < mesh.points.size(); ++p)
    s += mesh.weights[p] *
         (std::norm(v.value[static_cast<int>(p)]) + std::norm(v.grad[p][0]) + std::norm(v.grad[p][1]));
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Experiments.

struct ExperimentOptions {
  Engine engine = Engine::Oracle;
  double delta = 0.0;  // 0: 0.05 diam(D)
  int J = 64;
  std::vector<double> sample_depths{0.5, 1.0, 2.0, 4.0};  // multiples of delta / j
  int mesh_angular = 128;  // BIE engine only
  double mesh_tail = 0.05;
};

/// Per-source results.  `w` is v_j for point sources and v_j - u^i_j for dipoles.
struct SingularityRecord {
  int j = 0;
  Vec2 source;
  cplx c_fit{0.0};         // gradient fit against Phi0 (point sources)
  double vnorm_h1 = 0.0;   // |v_j|
  double w_h1 = 0.0;       // |w|
  double phi0_h1 = 0.0;    // |Phi0(., x_j)|
  cplx w_phi0{0.0};        // (w, Phi0) in H^1
  double incident_l2sq = 0.0;
  double remainder_h1 = 0.0;  // |w - c Phi0| with the run's constant

  double remainder_for(cplx c) const {
    const double sq = w_h1 * w_h1 - 2.0 * (std::conj(c) * w_phi0).real() + std::norm(c) * phi0_h1 * phi0_h1;
    return std::sqrt(std::max(sq, 0.0));
  }
};

struct SingularityExperiment {
  Engine engine = Engine::Oracle;
  bool dipole = false;
  SourceRay ray;
  double lambda0 = 1.0;
  cplx gamma0{0.0};
  std::vector<double> sample_depths;
  std::vector<SingularityRecord> records;
  // dipole regression w ~ slope Phi0 + intercept over all j
  cplx slope{0.0}, intercept{0.0};

  double expected_constant() const { return 2.0 / (lambda0 + 1.0); }
  cplx c_final() const { return records.back().c_fit; }
  double gamma_hat() const { return -2.0 * slope.real(); }
};

namespace detail {

struct SourceSolve {
  std::vector<cplx> w_samples;                 // w at the sample points
  std::vector<std::array<cplx, 2>> v_grads;    // grad v at the sample points
  double v_sq = 0.0, w_sq = 0.0, phi_sq = 0.0, inc_l2sq = 0.0;
  cplx w_phi{0.0};
};

inline std::vector<Vec2> ray_samples(const SourceRay& ray, int j, const std::vector<double>& depths) {
  std::vector<Vec2> pts;
  for (double s : depths) pts.push_back(ray.x0 - s * (ray.delta / j) * ray.normal);
  return pts;
}

// Exact angular integration by Parseval on a radial grid graded toward R.
inline void series_norms(const ModeTable& t, const Vec2& z, bool subtract_incident, int M_cap_extra,
                         const GaussRule& radial, SourceSolve& out) {
  const RadialConfig& rc = t.config;
  const double rho = z.norm(), psi = std::atan2(z.y(), z.x()), k = rc.k;
  const int m_base = static_cast<int>(std::ceil(std::max(k, std::abs(rc.interior_wavenumber())) * rc.R)) + 20;
  std::optional<BesselLadder> hz;
  if (subtract_incident) hz = hankel1_ladder(cplx{k * rho}, t.M);
  const Incidence& inc = t.incidence;
  const bool point = std::holds_alternative<PointSource>(inc);
  double ar = 0.0, at = 0.0;
  if (auto dp = std::get_if<Dipole>(&inc)) {
    ar = dp->axis.dot(Vec2(std::cos(psi), std::sin(psi)));
    at = dp->axis.dot(Vec2(-std::sin(psi), std::cos(psi)));
  }
  std::vector<cplx> eps(t.M + 1);  // e^{-i m psi}
  eps[0] = 1.0;
  for (int m = 1; m <= t.M; ++m) eps[m] = eps[m - 1] * std::exp(-kI * psi);
  for (std::size_t q = 0; q < radial.nodes.size(); ++q) {
    const double r = radial.nodes[q];
    const int mr = std::min(t.M, std::max(m_base, static_cast<int>(std::ceil(std::log(1e-17) / std::log(r / rho)))) +
                                     M_cap_extra);
    const RadialModes md = radial_modes(t, r, mr);
    std::optional<BesselLadder> jr;
    if (subtract_incident) jr = bessel_j_ladder(cplx{k * r}, mr);
    // Phi0 modes (r/rho)^|m| e^{-i m psi} / (4 pi |m|), built by recurrence
    std::vector<cplx> pw(mr + 1);
    pw[0] = 1.0;
    const cplx step = (r / rho) * std::exp(-kI * psi);
    for (int m = 1; m <= mr; ++m) pw[m] = pw[m - 1] * step;
    double v_sq = 0.0, w_sq = 0.0, phi_sq = 0.0, inc_sq = 0.0;
    cplx w_phi{0.0};
    for (int m = -mr; m <= mr; ++m) {
      const int i = t.index(m), a = std::abs(m);
      const double m2 = double(m) * m / (r * r);
      const cplx v = md.value[i], dv = md.deriv[i];
      cplx w = v, dw = dv;
      if (subtract_incident) {
        // Graf expansion of the source field, as in incident_mode
        const cplx base = 0.25 * kI * (m >= 0 ? eps[a] : std::conj(eps[a])) * std::exp(jr->log_value[a] + hz->log_value[a]);
        const cplx ui = point ? base : -base * (k * hz->log_deriv[a] * ar - kI * (double(m) / rho) * at);
        const cplx dui = ui * k * jr->log_deriv[a];
        w -= ui;
        dw -= dui;
        inc_sq += std::norm(ui);
      }
      cplx p{0.0}, dp{0.0};
      if (m == 0) {
        p = -std::log(rho) / (2.0 * kPi);
      } else {
        p = (m > 0 ? pw[a] : std::conj(pw[a])) / (4.0 * kPi * a);
        dp = (a / r) * p;
      }
      v_sq += std::norm(v) * (1.0 + m2) + std::norm(dv);
      w_sq += std::norm(w) * (1.0 + m2) + std::norm(dw);
      phi_sq += std::norm(p) * (1.0 + m2) + std::norm(dp);
      w_phi += w * std::conj(p) * (1.0 + m2) + dw * std::conj(dp);
    }
    const double wt = 2.0 * kPi * r * radial.weights[q];
    out.v_sq += wt * v_sq;
    out.w_sq += wt * w_sq;
    out.phi_sq += wt * phi_sq;
    out.w_phi += wt * w_phi;
    out.inc_l2sq += wt * inc_sq;
  }
}

inline SourceSolve solve_source_oracle(const RadialConfig& rc, const Incidence& inc, const std::vector<Vec2>& samples,
                                       const GaussRule& radial, bool dipole) {
  const ModeTable t = series_solve(rc, inc);
  SourceSolve s;
  const RegionFields f = series_field_eval(t, samples, true);
  const Vec2 z = source_location(inc).value();
  const FieldValues ui = incident_field(inc, samples, rc.k);
  for (std::size_t p = 0; p < samples.size(); ++p) {
    if (f.region[p] != Region::Interior) throw GeometryError("sample point outside D \\ D_b; reduce delta");
    const cplx v = f.value[static_cast<int>(p)];
    s.w_samples.push_back(dipole ? v - ui.value[static_cast<int>(p)] : v);
    s.v_grads.push_back(f.grad[p]);
  }
  series_norms(t, z, dipole, 0, radial, s);
  return s;
}

inline SourceSolve solve_source_bie(const ForwardSolver& solver, const Incidence& inc, const std::vector<Vec2>& samples,
                                    const RegionMesh& mesh, bool dipole) {
  const ForwardSolution sol = solver.solve(inc);
  const double k = sol.system->config.k;
  const Vec2 z = source_location(inc).value();
  SourceSolve s;
  const RegionFields f = scattered_and_transmitted(sol, samples, true);
  const FieldValues ui = incident_field(inc, samples, k);
  for (std::size_t p = 0; p < samples.size(); ++p) {
    if (f.region[p] != Region::Interior) throw GeometryError("sample point outside D \\ D_b; reduce delta");
    const cplx v = f.value[static_cast<int>(p)];
    s.w_samples.push_back(dipole ? v - ui.value[static_cast<int>(p)] : v);
    s.v_grads.push_back(f.grad[p]);
  }
  const RegionFields vm = scattered_and_transmitted(sol, mesh.points, true);
  FieldValues um;
  if (dipole) um = incident_field(inc, mesh.points, k);
  for (std::size_t p = 0; p < mesh.points.size(); ++p) {
    const int ip = static_cast<int>(p);
    const double wt = mesh.weights[p];
    const cplx v = vm.value[ip];
    const std::array<cplx, 2> dv = vm.grad[p];
    cplx w = v;
    std::array<cplx, 2> dw = dv;
    if (dipole) {
      w -= um.value[ip];
      dw = {dv[0] - um.grad[p][0], dv[1] - um.grad[p][1]};
      s.inc_l2sq += wt * std::norm(um.value[ip]);
    }
    const double ph = laplace_fundamental(mesh.points[p], z);
    const Vec2 dph = laplace_fundamental_grad(mesh.points[p], z);
    s.v_sq += wt * (std::norm(v) + std::norm(dv[0]) + std::norm(dv[1]));
    s.w_sq += wt * (std::norm(w) + std::norm(dw[0]) + std::norm(dw[1]));
    s.phi_sq += wt * (ph * ph + dph.squaredNorm());
    s.w_phi += wt * (w * ph + dw[0] * dph.x() + dw[1] * dph.y());
  }
  return s;
}

inline SingularityExperiment run_experiment(const ScattererConfig& cfg, double t0, const ExperimentOptions& opt,
                                            bool dipole) {
  validate_scatterer(cfg);
  const double delta = opt.delta > 0.0 ? opt.delta : 0.05 * cfg.outer.diameter();
  SingularityExperiment ex;
  ex.engine = opt.engine;
  ex.dipole = dipole;
  ex.ray = source_sequence(cfg.outer, t0, delta, opt.J);
  ex.lambda0 = cfg.lambda;
  ex.gamma0 = cfg.gamma(t0);
  ex.sample_depths = opt.sample_depths;
  if (opt.sample_depths.empty()) throw SingularityError("no sample depths");

  const BoundaryCurve fine = cfg.outer.resampled(std::max(cfg.outer.size(), 1024));
  const double shallow = *std::min_element(opt.sample_depths.begin(), opt.sample_depths.end());
  for (int j = 1; j <= opt.J; ++j)
    for (const Vec2& x : ray_samples(ex.ray, j, opt.sample_depths))
      if (classify(cfg, x) == Region::Obstacle || signed_distance(fine, x) > -0.5 * shallow * delta / j)
        throw GeometryError("containment: sample point for source " + std::to_string(j) +
                            " is outside D \\ D_b; reduce delta");

  std::optional<RadialConfig> rc;
  std::optional<ForwardSolver> solver;
  GaussRule radial;
  RegionMesh mesh;
  if (opt.engine == Engine::Oracle) {
    rc = radial_from_scatterer(cfg);
    // one radial grid for all j so norms are comparable across the sequence
    radial = graded_interval(rc->Rb.value_or(0.0), rc->R, 0.5 * delta / opt.J);
  } else {
    solver.emplace(cfg, SolveOptions{false});
    mesh = mapped_mesh(cfg, opt.mesh_angular, opt.mesh_tail);
  }

  const int J = opt.J;
  std::vector<SourceSolve> solves(J);
  std::vector<std::exception_ptr> errors(J);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
  for (int jj = 0; jj < J; ++jj) {
    try {
      const Vec2 z = ex.ray.sources[jj];
      const Incidence inc = dipole ? Incidence{Dipole{z, ex.ray.normal}} : Incidence{PointSource{z}};
      const auto samples = ray_samples(ex.ray, jj + 1, opt.sample_depths);
      solves[jj] = rc ? solve_source_oracle(*rc, inc, samples, radial, dipole)
                      : solve_source_bie(*solver, inc, samples, mesh, dipole);
    } catch (...) {
      errors[jj] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (int jj = 0; jj < J; ++jj) {
    const SourceSolve& s = solves[jj];
    SingularityRecord rec;
    rec.j = jj + 1;
    rec.source = ex.ray.sources[jj];
    const auto samples = ray_samples(ex.ray, rec.j, opt.sample_depths);
    cplx num{0.0};
    double den = 0.0;
    for (std::size_t p = 0; p < samples.size(); ++p) {
      const Vec2 g = laplace_fundamental_grad(samples[p], rec.source);
      num += g.x() * s.v_grads[p][0] + g.y() * s.v_grads[p][1];
      den += g.squaredNorm();
    }
    rec.c_fit = num / den;
    rec.vnorm_h1 = std::sqrt(s.v_sq);
    rec.w_h1 = std::sqrt(s.w_sq);
    rec.phi0_h1 = std::sqrt(s.phi_sq);
    rec.w_phi0 = s.w_phi;
    rec.incident_l2sq = s.inc_l2sq;
    ex.records.push_back(rec);
  }

  if (dipole) {
    const int per = static_cast<int>(opt.sample_depths.size());
    Eigen::MatrixXcd A(J * per, 2);
    CVector y(J * per);
    for (int jj = 0; jj < J; ++jj) {
      const auto samples = ray_samples(ex.ray, jj + 1, opt.sample_depths);
      for (int p = 0; p < per; ++p) {
        A(jj * per + p, 0) = laplace_fundamental(samples[p], ex.ray.sources[jj]);
        A(jj * per + p, 1) = 1.0;
        y[jj * per + p] = solves[jj].w_samples[p];
      }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < 2) throw SingularityError("dipole regression is rank deficient; enlarge the sample set");
    const CVector sol = qr.solve(y);
    ex.slope = sol[0];
    ex.intercept = sol[1];
    for (auto& r : ex.records) r.remainder_h1 = r.remainder_for(ex.slope);
  } else {
    for (auto& r : ex.records) r.remainder_h1 = r.remainder_for(r.c_fit);
  }
  return ex;
}

}  // namespace detail

/// Point sources x_j; fits v_j ~ c_j Phi0(., x_j) on gradients along the ray.
inline SingularityExperiment run_point_source_experiment(const ScattererConfig& cfg, double t0,
                                                         const ExperimentOptions& opt = {}) {
  return detail::run_experiment(cfg, t0, opt, false);
}

/// Normal dipoles at x_j with lambda = 1; regresses v_j - u^i_j on {Phi0, 1}.
inline SingularityExperiment run_dipole_experiment(const ScattererConfig& cfg, double t0,
                                                   const ExperimentOptions& opt = {}) {
  if (std::abs(cfg.lambda - 1.0) > 1e-14)
    throw ValidationError({{"lambda", -1, "dipole experiment requires lambda = 1"}});
  return detail::run_experiment(cfg, t0, opt, true);
}

struct LambdaEstimate {
  double value = 0.0;
  double error = 0.0;  // from the spread between c_J and c_{J/2}
};

inline LambdaEstimate lambda_from_constant(double c, double dc = 0.0) {
  if (!(c > 0.0 && c < 2.0)) throw SingularityError("fitted constant " + std::to_string(c) + " lies outside (0, 2)");
  return {2.0 / c - 1.0, 2.0 * dc / (c * c)};
}

inline LambdaEstimate recover_lambda_at_boundary(const SingularityExperiment& ex) {
  if (ex.records.empty() || ex.dipole) throw SingularityError("point-source experiment required");
  const double c = ex.records.back().c_fit.real();
  const double c_half = ex.records[std::max<std::size_t>(ex.records.size() / 2, 1) - 1].c_fit.real();
  return lambda_from_constant(c, std::abs(c - c_half));
}

}  // namespace conducta
