// Conductive transmission problem with embedded obstacles, solved by the
// combined layer-potential system
//
//   u^s = S phi + lambda D psi                      (exterior, wavenumber k)
//   v   = S1 phi + D1 psi + sum_j S1_j eta_j        (D \ D_b, k1 = k sqrt(n/lambda))
//
// Unknown layout: [psi (N), phi (N), eta_0 (N_0), eta_1 (N_1), ...].
#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "conducta/geometry.hpp"
#include "conducta/layerpot.hpp"

namespace conducta {

inline constexpr const char* kFarFieldNormalization =
    "u^s(x) = exp(i pi/4)/sqrt(8 pi k) exp(ikr)/sqrt(r) (u_inf(xhat) + O(1/r)); Phi_inf(xhat;z) = exp(-ik xhat.z)";

class ResonanceError : public std::runtime_error {
 public:
  ResonanceError(const std::string& what, double cond) : std::runtime_error(what), condition(cond) {}
  double condition;
};

class RegionError : public EvaluationError {
 public:
  using EvaluationError::EvaluationError;
};

// ---------------------------------------------------------------------------
// Incident fields.

namespace detail {

inline void incident_at(const Incidence& inc, const Vec2& x, double k, cplx& val, std::array<cplx, 2>& grad) {
  if (auto pw = std::get_if<PlaneWave>(&inc)) {
    val = std::exp(kI * (k * pw->direction.dot(x)));
    grad = {kI * k * pw->direction.x() * val, kI * k * pw->direction.y() * val};
    return;
  }
  const Vec2 z = source_location(inc).value();
  const Vec2 d = x - z;
  const double r = d.norm();
  if (r == 0.0) throw EvaluationError("incident field evaluated at its source");
  cplx phi, g, gp, j0, j1r;
  pair_kernel(Kernel::helmholtz(k), r, phi, g, gp, j0, j1r);
  if (std::holds_alternative<PointSource>(inc)) {
    val = phi;
    grad = {-g * d.x(), -g * d.y()};
    return;
  }
  // dipole: grad_x Phi(x, z) . a
  const Vec2& a = std::get<Dipole>(inc).axis;
  const double da = d.dot(a);
  val = -g * da;
  grad = {-(gp * d.x() / r * da + g * a.x()), -(gp * d.y() / r * da + g * a.y())};
}

}  // namespace detail

inline FieldValues incident_field(const Incidence& inc, const std::vector<Vec2>& points, double k) {
  FieldValues out;
  out.value.resize(static_cast<int>(points.size()));
  out.grad.resize(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    cplx v;
    detail::incident_at(inc, points[p], k, v, out.grad[p]);
    out.value[static_cast<int>(p)] = v;
  }
  return out;
}

/// Incident trace and normal derivative on a curve's nodes.
inline std::pair<CVector, CVector> incident_trace(const Incidence& inc, const BoundaryCurve& c, double k) {
  const FieldValues f = incident_field(inc, c.points(), k);
  CVector dn(c.size());
  for (int i = 0; i < c.size(); ++i) dn[i] = f.grad[i][0] * c.normal(i).x() + f.grad[i][1] * c.normal(i).y();
  return {f.value, dn};
}

// ---------------------------------------------------------------------------

struct DensitySet {
  CVector psi, phi;
  std::vector<CVector> eta;
};

/// Same configuration at another resolution.
inline ScattererConfig with_resolution(const ScattererConfig& cfg, int n_outer, int n_obstacle) {
  ScattererConfig out = cfg;
  out.outer = cfg.outer.resampled(n_outer);
  for (auto& ob : out.obstacles) ob = ob.resampled(n_obstacle);
  return out;
}

/// Assembled operators plus the system matrix of one configuration.
struct SystemData {
  ScattererConfig config;
  double h = 0.5;
  Kernel ext, in;
  OperatorSet outer_k, outer_k1;
  std::vector<OperatorSet> ob_self;               // k1 on each obstacle
  std::vector<OperatorSet> ob_to_outer;           // source obstacle j, target outer
  std::vector<OperatorSet> outer_to_ob;           // source outer, target obstacle j
  std::vector<std::vector<OperatorSet>> ob_to_ob; // [src][tgt], empty when src == tgt
  CVector gamma;
  CMatrix matrix;
  std::vector<int> offsets;  // start of each eta block

  int n_outer() const { return config.outer.size(); }
  int size() const { return static_cast<int>(matrix.rows()); }

  CVector rhs(const Incidence& inc) const {
    const auto [ui, dui] = incident_trace(inc, config.outer, config.k);
    CVector b = CVector::Zero(size());
    const int n = n_outer();
    b.head(n) = -2.0 * h * ui;
    b.segment(n, n) = 2.0 * h * dui;
    return b;
  }
};

inline std::shared_ptr<SystemData> assemble_system(const ScattererConfig& cfg_in, bool build_matrix = true) {
  auto sys = std::make_shared<SystemData>();
  SystemData& s = *sys;
  s.config = cfg_in;
  const ScattererConfig& cfg = s.config;
  const double lam = cfg.lambda;
  s.h = 1.0 / (lam + 1.0);
  s.ext = Kernel::helmholtz(cfg.k);
  s.in = Kernel::helmholtz(cfg.interior_wavenumber());
  const BoundaryCurve& outer = cfg.outer;
  s.outer_k = assemble_self(outer, s.ext, true);
  s.outer_k1 = assemble_self(outer, s.in, true);
  const int nb = static_cast<int>(cfg.obstacles.size());
  s.ob_to_ob.assign(nb, std::vector<OperatorSet>(nb));
  for (int j = 0; j < nb; ++j) {
    s.ob_self.push_back(assemble_self(cfg.obstacles[j], s.in, false));
    s.ob_to_outer.push_back(assemble_cross(cfg.obstacles[j], outer, s.in));
    s.outer_to_ob.push_back(assemble_cross(outer, cfg.obstacles[j], s.in));
    for (int l = 0; l < nb; ++l)
      if (l != j) s.ob_to_ob[j][l] = assemble_cross(cfg.obstacles[j], cfg.obstacles[l], s.in);
  }
  const int n = outer.size();
  s.gamma.resize(n);
  {
    const auto g = cfg.gamma.samples(outer);
    for (int i = 0; i < n; ++i) s.gamma[i] = g[i];
  }
  int total = 2 * n;
  for (int j = 0; j < nb; ++j) {
    s.offsets.push_back(total);
    total += cfg.obstacles[j].size();
  }
  if (!build_matrix) {
    s.matrix.resize(total, 0);
    return sys;
  }
  CMatrix& A = s.matrix;
  A = CMatrix::Zero(total, total);
  const double h = s.h;
  const auto& e = s.outer_k;
  const auto& i1 = s.outer_k1;
  const auto G = s.gamma.asDiagonal();
  const CMatrix I = CMatrix::Identity(n, n);
  // row 1: u - v = 0
  A.block(0, 0, n, n) = I + 2.0 * h * (lam * e.K - i1.K);
  A.block(0, n, n, n) = 2.0 * h * (e.S - i1.S);
  // row 2: du/dnu - lambda dv/dnu - gamma v = 0
  A.block(n, 0, n, n) = -h * CMatrix(G) + 2.0 * h * (G * i1.K) - 2.0 * h * lam * (e.T - i1.T);
  A.block(n, n, n, n) = I + 2.0 * h * (lam * i1.Kp + G * i1.S - e.Kp);
  for (int j = 0; j < nb; ++j) {
    const int off = s.offsets[j], m = cfg.obstacles[j].size();
    const auto& bo = s.ob_to_outer[j];
    A.block(0, off, n, m) = -2.0 * h * bo.S;
    A.block(n, off, n, m) = 2.0 * h * (lam * bo.Kp + G * bo.S);
    const auto& ob = s.outer_to_ob[j];
    const auto& self = s.ob_self[j];
    const ObstacleCondition& bc = cfg.obstacle_conditions[j];
    if (bc.type == ObstacleType::Dirichlet) {
      A.block(off, 0, m, n) = ob.K;
      A.block(off, n, m, n) = ob.S;
      A.block(off, off, m, m) = self.S;
      for (int l = 0; l < nb; ++l)
        if (l != j) A.block(off, s.offsets[l], m, cfg.obstacles[l].size()) = s.ob_to_ob[l][j].S;
    } else {
      const cplx irho = kI * bc.effective_rho();
      A.block(off, 0, m, n) = -2.0 * (ob.T + irho * ob.K);
      A.block(off, n, m, n) = -2.0 * (ob.Kp + irho * ob.S);
      A.block(off, off, m, m) = CMatrix::Identity(m, m) - 2.0 * (self.Kp + irho * self.S);
      for (int l = 0; l < nb; ++l)
        if (l != j) {
          const auto& c = s.ob_to_ob[l][j];
          A.block(off, s.offsets[l], m, cfg.obstacles[l].size()) = -2.0 * (c.Kp + irho * c.S);
        }
    }
  }
  return sys;
}

/// Boundary traces implied by a density set.
struct BoundaryTraces {
  CVector u, du;   // exterior total field on the outer curve
  CVector v, dv;   // interior field on the outer curve
  std::vector<CVector> vb, dvb;  // field on each obstacle (normal out of the obstacle)
};

inline DensitySet split_solution(const SystemData& s, const CVector& x) {
  DensitySet d;
  const int n = s.n_outer();
  d.psi = x.head(n);
  d.phi = x.segment(n, n);
  for (std::size_t j = 0; j < s.offsets.size(); ++j)
    d.eta.push_back(x.segment(s.offsets[j], s.config.obstacles[j].size()));
  return d;
}

inline BoundaryTraces boundary_traces(const SystemData& s, const DensitySet& d, const Incidence& inc) {
  const auto [ui, dui] = incident_trace(inc, s.config.outer, s.config.k);
  const double lam = s.config.lambda;
  const auto& e = s.outer_k;
  const auto& i1 = s.outer_k1;
  BoundaryTraces t;
  t.u = ui + e.S * d.phi + lam * (e.K * d.psi + 0.5 * d.psi);
  t.du = dui + e.Kp * d.phi - 0.5 * d.phi + lam * (e.T * d.psi);
  t.v = i1.S * d.phi + i1.K * d.psi - 0.5 * d.psi;
  t.dv = i1.Kp * d.phi + 0.5 * d.phi + i1.T * d.psi;
  const int nb = static_cast<int>(d.eta.size());
  for (int j = 0; j < nb; ++j) {
    t.v += s.ob_to_outer[j].S * d.eta[j];
    t.dv += s.ob_to_outer[j].Kp * d.eta[j];
  }
  for (int j = 0; j < nb; ++j) {
    const auto& ob = s.outer_to_ob[j];
    const auto& self = s.ob_self[j];
    CVector vb = self.S * d.eta[j] + ob.S * d.phi + ob.K * d.psi;
    CVector dvb = self.Kp * d.eta[j] - 0.5 * d.eta[j] + ob.Kp * d.phi + ob.T * d.psi;
    for (int l = 0; l < nb; ++l)
      if (l != j) {
        vb += s.ob_to_ob[l][j].S * d.eta[l];
        dvb += s.ob_to_ob[l][j].Kp * d.eta[l];
      }
    t.vb.push_back(vb);
    t.dvb.push_back(dvb);
  }
  return t;
}

struct BoundaryResiduals {
  double continuity = 0.0;    // max |u - v| / field scale
  double flux = 0.0;          // max |du - lambda dv - gamma v| / flux scale
  double obstacle = 0.0;      // obstacle condition, relative
  double max() const { return std::max({continuity, flux, obstacle}); }
};

inline BoundaryResiduals residuals_from_traces(const ScattererConfig& cfg, const BoundaryTraces& t,
                                               const CVector& gamma, int stride, int offset) {
  BoundaryResiduals r;
  const double fs = std::max(t.u.cwiseAbs().maxCoeff(), 1e-300);
  const double ds = std::max(t.du.cwiseAbs().maxCoeff(), 1e-300);
  for (int i = offset; i < t.u.size(); i += stride) {
    r.continuity = std::max(r.continuity, std::abs(t.u[i] - t.v[i]) / fs);
    r.flux = std::max(r.flux, std::abs(t.du[i] - cfg.lambda * t.dv[i] - gamma[i] * t.v[i]) / ds);
  }
  for (std::size_t j = 0; j < t.vb.size(); ++j) {
    const ObstacleCondition& bc = cfg.obstacle_conditions[j];
    for (int i = offset; i < t.vb[j].size(); i += stride) {
      const double res = bc.type == ObstacleType::Dirichlet
                             ? std::abs(t.vb[j][i]) / fs
                             : std::abs(t.dvb[j][i] + kI * bc.effective_rho() * t.vb[j][i]) / ds;
      r.obstacle = std::max(r.obstacle, res);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

struct ForwardSolution {
  std::shared_ptr<const SystemData> system;
  Incidence incidence;
  DensitySet densities;
  double condition = 0.0;
  double residual_norm = 0.0;  // ||A x - b|| / ||b||
  BoundaryResiduals offnode;   // a-posteriori, at midpoints on the doubled grid
  bool offnode_checked = false;

  const ScattererConfig& config() const { return system->config; }
};

struct SolveOptions {
  bool verify = true;                 // a-posteriori off-node check
  double resonance_threshold = 1e12;
};

class ForwardSolver {
 public:
  explicit ForwardSolver(const ScattererConfig& cfg, SolveOptions opts = {}) : opts_(opts) {
    validate_scatterer(cfg);
    sys_ = assemble_system(cfg);
    lu_ = std::make_shared<Eigen::PartialPivLU<CMatrix>>(sys_->matrix);
    condition_ = 1.0 / lu_->rcond();
    if (!(condition_ < opts_.resonance_threshold))
      throw ResonanceError("system near-singular (condition estimate " + std::to_string(condition_) +
                               "); wavenumber close to a resonance of the representation",
                           condition_);
  }

  double condition() const { return condition_; }
  const SystemData& system() const { return *sys_; }
  std::shared_ptr<const SystemData> system_ptr() const { return sys_; }

  ForwardSolution solve(const Incidence& inc) const {
    validate_incidence(sys_->config, inc);
    const CVector b = sys_->rhs(inc);
    const CVector x = lu_->solve(b);
    ForwardSolution sol;
    sol.system = sys_;
    sol.incidence = inc;
    sol.densities = split_solution(*sys_, x);
    sol.condition = condition_;
    const double bn = b.norm();
    sol.residual_norm = bn > 0 ? (sys_->matrix * x - b).norm() / bn : (sys_->matrix * x).norm();
    if (opts_.verify) {
      sol.offnode = verify_offnode(sol);
      sol.offnode_checked = true;
    }
    return sol;
  }

  /// Boundary conditions at the midpoints between nodes: densities are
  /// interpolated to the doubled grid and traced with freshly assembled
  /// operators there.
  BoundaryResiduals verify_offnode(const ForwardSolution& sol) const {
    std::call_once(*fine_once_, [&] {
      const auto& cfg = sys_->config;
      ScattererConfig fine = cfg;
      fine.outer = cfg.outer.resampled(2 * cfg.outer.size());
      for (std::size_t j = 0; j < fine.obstacles.size(); ++j)
        fine.obstacles[j] = cfg.obstacles[j].resampled(2 * cfg.obstacles[j].size());
      fine_ = assemble_system(fine, false);
    });
    DensitySet d2;
    const int n2 = fine_->n_outer();
    d2.psi = trig_resample(sol.densities.psi, n2);
    d2.phi = trig_resample(sol.densities.phi, n2);
    for (std::size_t j = 0; j < sol.densities.eta.size(); ++j)
      d2.eta.push_back(trig_resample(sol.densities.eta[j], fine_->config.obstacles[j].size()));
    const BoundaryTraces t = boundary_traces(*fine_, d2, sol.incidence);
    return residuals_from_traces(fine_->config, t, fine_->gamma, 2, 1);
  }

 private:
  SolveOptions opts_;
  std::shared_ptr<SystemData> sys_;
  std::shared_ptr<Eigen::PartialPivLU<CMatrix>> lu_;
  double condition_ = 0.0;
  mutable std::shared_ptr<std::once_flag> fine_once_ = std::make_shared<std::once_flag>();
  mutable std::shared_ptr<SystemData> fine_;
};

inline ForwardSolution solve_forward(const ScattererConfig& cfg, const Incidence& inc, SolveOptions opts = {}) {
  return ForwardSolver(cfg, opts).solve(inc);
}

// ---------------------------------------------------------------------------
// Fields.

enum class Region { Exterior, Interior, Obstacle };

inline Region classify(const ScattererConfig& cfg, const Vec2& x) {
  if (!cfg.outer.contains(x)) return Region::Exterior;
  for (const auto& ob : cfg.obstacles)
    if (ob.contains(x)) return Region::Obstacle;
  return Region::Interior;
}

struct RegionFields {
  std::vector<Region> region;
  CVector value;  // u^s outside, v inside
  std::vector<std::array<cplx, 2>> grad;
};

inline RegionFields scattered_and_transmitted(const ForwardSolution& sol, const std::vector<Vec2>& points,
                                              bool with_gradient) {
  const SystemData& s = *sol.system;
  const ScattererConfig& cfg = s.config;
  RegionFields out;
  out.region.resize(points.size());
  out.value = CVector::Zero(static_cast<int>(points.size()));
  if (with_gradient) out.grad.assign(points.size(), {cplx{0.0}, cplx{0.0}});
  std::vector<Vec2> ext, in;
  std::vector<int> ext_idx, in_idx;
  for (std::size_t p = 0; p < points.size(); ++p) {
    out.region[p] = classify(cfg, points[p]);
    if (out.region[p] == Region::Obstacle) throw RegionError("evaluation point inside an obstacle");
    if (out.region[p] == Region::Exterior) {
      ext.push_back(points[p]);
      ext_idx.push_back(static_cast<int>(p));
    } else {
      in.push_back(points[p]);
      in_idx.push_back(static_cast<int>(p));
    }
  }
  auto scatter = [&](const FieldValues& f, const std::vector<int>& idx, cplx scale) {
    for (std::size_t q = 0; q < idx.size(); ++q) {
      out.value[idx[q]] += scale * f.value[static_cast<int>(q)];
      if (with_gradient) {
        out.grad[idx[q]][0] += scale * f.grad[q][0];
        out.grad[idx[q]][1] += scale * f.grad[q][1];
      }
    }
  };
  const DensitySet& d = sol.densities;
  if (!ext.empty()) {
    scatter(eval_potential(PotentialKind::Single, d.phi, cfg.outer, ext, s.ext, with_gradient), ext_idx, 1.0);
    scatter(eval_potential(PotentialKind::Double, d.psi, cfg.outer, ext, s.ext, with_gradient), ext_idx, cfg.lambda);
  }
  if (!in.empty()) {
    scatter(eval_potential(PotentialKind::Single, d.phi, cfg.outer, in, s.in, with_gradient), in_idx, 1.0);
    scatter(eval_potential(PotentialKind::Double, d.psi, cfg.outer, in, s.in, with_gradient), in_idx, 1.0);
    for (std::size_t j = 0; j < d.eta.size(); ++j)
      scatter(eval_potential(PotentialKind::Single, d.eta[j], cfg.obstacles[j], in, s.in, with_gradient), in_idx, 1.0);
  }
  return out;
}

struct FarFieldPattern {
  std::vector<double> angles;
  CVector values;
  std::string normalization = kFarFieldNormalization;
};

inline std::vector<double> equispaced_angles(int m) {
  std::vector<double> a(m);
  for (int i = 0; i < m; ++i) a[i] = 2.0 * kPi * i / m;
  return a;
}

inline FarFieldPattern far_field(const ForwardSolution& sol, const std::vector<double>& angles) {
  const ScattererConfig& cfg = sol.config();
  FarFieldPattern p;
  p.angles = angles;
  p.values = far_kernel(PotentialKind::Single, sol.densities.phi, cfg.outer, angles, cfg.k) +
             cfg.lambda * far_kernel(PotentialKind::Double, sol.densities.psi, cfg.outer, angles, cfg.k);
  return p;
}

// ---------------------------------------------------------------------------
// Energy bookkeeping.  With nu outward on every curve,
//   Im int_dD conj(u) du  =  int_dD Im(gamma)|v|^2 + Im int_dDb lambda conj(v) dv - k^2 Im(n) int |v|^2.

struct EnergyAudit {
  double exterior_flux = 0.0;    // Im int conj(u) du/dnu over dD
  double interface_flux = 0.0;   // Im int conj(v) (lambda dv/dnu + gamma v) over dD
  double conductive_loss = 0.0;  // int Im(gamma) |v|^2 over dD
  double obstacle_flux = 0.0;    // Im int lambda conj(v) dv/dnu over dDb
  double impedance_loss = 0.0;   // -lambda int rho |v|^2 over impedance components
  double dissipation = 0.0;      // k^2 Im(n) int |v|^2 over D \ Db
  double field_scale = 0.0;      // int |u| |du| over dD
  double balance_residual = 0.0; // |exterior - (conductive + obstacle - dissipation)| / field scale
  double impedance_residual = 0.0;  // |obstacle_flux - impedance_loss| / |impedance_loss|
  bool volume_computed = false;
};

/// int_{D \ Db} |v|^2 dx.  Star-shaped outer curve around its centroid when
/// there is no obstacle; with one obstacle the straight segments joining
/// x_b(t) to x(t) foliate the annulus.  Gauss-Legendre in the transverse
/// variable with Hermite end layers fed by boundary traces.
inline double interior_mean_square(const ForwardSolution& sol, int n_transverse = 20, double layer = 0.05) {
  const SystemData& s = *sol.system;
  const ScattererConfig& cfg = s.config;
  if (cfg.obstacles.size() > 1) throw EvaluationError("volume quadrature supports at most one obstacle");
  const bool annulus = !cfg.obstacles.empty();
  const int mt = annulus ? std::max(cfg.outer.size(), cfg.obstacles[0].size()) : cfg.outer.size();
  const BoundaryCurve outer = cfg.outer.resampled(mt);
  const BoundaryCurve inner = annulus ? cfg.obstacles[0].resampled(mt) : BoundaryCurve();
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : cfg.outer.points()) centroid += p;
  centroid /= cfg.outer.size();
  const BoundaryTraces tr = boundary_traces(s, sol.densities, sol.incidence);
  const Eigen::MatrixXd D = spectral_diff_matrix(mt);
  // gradient of v on a boundary from its trace and normal derivative
  auto boundary_grad = [&](const BoundaryCurve& c, const CVector& v, const CVector& dv) {
    const CVector dvt = D.cast<cplx>() * v;
    std::vector<std::array<cplx, 2>> g(mt);
    for (int i = 0; i < mt; ++i) {
      const Vec2 tau = c.d1(i) / c.speed(i);
      const cplx ds = dvt[i] / c.speed(i);
      g[i] = {dv[i] * c.normal(i).x() + ds * tau.x(), dv[i] * c.normal(i).y() + ds * tau.y()};
    }
    return g;
  };
  const CVector vo = trig_resample(tr.v, mt), dvo = trig_resample(tr.dv, mt);
  const auto go = boundary_grad(outer, vo, dvo);
  CVector vi, dvi;
  std::vector<std::array<cplx, 2>> gi;
  if (annulus) {
    vi = trig_resample(tr.vb[0], mt);
    dvi = trig_resample(tr.dvb[0], mt);
    gi = boundary_grad(inner, vi, dvi);
  }
  // map X(s,t) = a(t) + s (b(t) - a(t)); a = inner curve or centroid
  auto a_pt = [&](int i) { return annulus ? inner.point(i) : centroid; };
  auto a_d1 = [&](int i) { return annulus ? inner.d1(i) : Vec2(Vec2::Zero()); };
  auto jac = [&](int i, double sv) {
    const Vec2 xs = outer.point(i) - a_pt(i);
    const Vec2 xt = a_d1(i) + sv * (outer.d1(i) - a_d1(i));
    return xs.x() * xt.y() - xs.y() * xt.x();
  };
  auto jac_ds = [&](int i) {
    const Vec2 xs = outer.point(i) - a_pt(i);
    const Vec2 xts = outer.d1(i) - a_d1(i);
    return xs.x() * xts.y() - xs.y() * xts.x();
  };
  const double s_lo = annulus ? layer : 0.0, s_hi = 1.0 - layer;
  const GaussRule g = gauss_legendre(n_transverse, s_lo, s_hi);
  std::vector<Vec2> pts;
  std::vector<double> svals;
  for (double sv : {s_lo, s_hi}) svals.push_back(sv);
  for (double sv : g.nodes) svals.push_back(sv);
  for (double sv : svals)
    for (int i = 0; i < mt; ++i) {
      const Vec2 x = a_pt(i) + sv * (outer.point(i) - a_pt(i));
      if (sv > 0.0 && jac(i, sv) <= 0.0) throw EvaluationError("volume map is not injective for this geometry");
      pts.push_back(x);
    }
  const RegionFields f = scattered_and_transmitted(sol, pts, true);
  const double wt = 2.0 * kPi / mt;
  double total = 0.0;
  auto dfds = [&](int i, double sv, cplx v, const std::array<cplx, 2>& gr) {
    const Vec2 xs = outer.point(i) - a_pt(i);
    const double d_abs2 = 2.0 * std::real(std::conj(v) * (gr[0] * xs.x() + gr[1] * xs.y()));
    return d_abs2 * jac(i, sv) + std::norm(v) * jac_ds(i);
  };
  const int off_g = 2 * mt;
  for (int i = 0; i < mt; ++i) {
    double col = 0.0;
    for (int q = 0; q < n_transverse; ++q) {
      const int idx = off_g + q * mt + i;
      col += g.weights[q] * std::norm(f.value[idx]) * jac(i, g.nodes[q]);
    }
    // outer layer [s_hi, 1]
    {
      const int ia = mt + i;
      const double fa = std::norm(f.value[ia]) * jac(i, s_hi), fb = std::norm(vo[i]) * jac(i, 1.0);
      const double da = dfds(i, s_hi, f.value[ia], f.grad[ia]), db = dfds(i, 1.0, vo[i], go[i]);
      col += 0.5 * layer * (fa + fb) - layer * layer / 12.0 * (db - da);
    }
    if (annulus) {
      const int ib = i;
      const double fa = std::norm(vi[i]) * jac(i, 0.0), fb = std::norm(f.value[ib]) * jac(i, s_lo);
      const double da = dfds(i, 0.0, vi[i], gi[i]), db = dfds(i, s_lo, f.value[ib], f.grad[ib]);
      col += 0.5 * layer * (fa + fb) - layer * layer / 12.0 * (db - da);
    }
    total += wt * col;
  }
  return total;
}

inline EnergyAudit energy_audit(const ForwardSolution& sol, bool with_volume = true) {
  const SystemData& s = *sol.system;
  const ScattererConfig& cfg = s.config;
  const BoundaryTraces t = boundary_traces(s, sol.densities, sol.incidence);
  EnergyAudit a;
  const BoundaryCurve& c = cfg.outer;
  const double w = 2.0 * kPi / c.size();
  for (int i = 0; i < c.size(); ++i) {
    const double ds = w * c.speed(i);
    a.exterior_flux += ds * std::imag(std::conj(t.u[i]) * t.du[i]);
    a.interface_flux += ds * std::imag(std::conj(t.v[i]) * (cfg.lambda * t.dv[i] + s.gamma[i] * t.v[i]));
    a.conductive_loss += ds * s.gamma[i].imag() * std::norm(t.v[i]);
    a.field_scale += ds * std::abs(t.u[i]) * std::abs(t.du[i]);
  }
  for (std::size_t j = 0; j < cfg.obstacles.size(); ++j) {
    const BoundaryCurve& b = cfg.obstacles[j];
    const double wb = 2.0 * kPi / b.size();
    const double rho = cfg.obstacle_conditions[j].effective_rho();
    for (int i = 0; i < b.size(); ++i) {
      const double ds = wb * b.speed(i);
      a.obstacle_flux += ds * cfg.lambda * std::imag(std::conj(t.vb[j][i]) * t.dvb[j][i]);
      a.impedance_loss -= ds * cfg.lambda * rho * std::norm(t.vb[j][i]);
    }
  }
  if (with_volume && cfg.n.imag() != 0.0) {
    a.dissipation = cfg.k * cfg.k * cfg.n.imag() * interior_mean_square(sol);
    a.volume_computed = true;
  }
  const double scale = std::max(a.field_scale, 1e-300);
  a.balance_residual = std::abs(a.exterior_flux - (a.conductive_loss + a.obstacle_flux - a.dissipation)) / scale;
  a.impedance_residual =
      a.impedance_loss != 0.0 ? std::abs(a.obstacle_flux - a.impedance_loss) / std::abs(a.impedance_loss) : 0.0;
  return a;
}

}  // namespace conducta
