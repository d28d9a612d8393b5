// Acceptance run: one PASS/FAIL line per criterion.  Exit status is 0 when
// every criterion was evaluated (an honest FAIL included) and 2 when a
// criterion could not be evaluated at all.  `--strict` makes any FAIL exit 1.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "conducta/forward.hpp"
#include "conducta/inverse.hpp"
#include "conducta/itp.hpp"
#include "conducta/layerpot.hpp"
#include "conducta/oracle.hpp"
#include "conducta/singlab.hpp"

using namespace conducta;

namespace tol {
constexpr double kPlaneOracle = 1e-6;
constexpr double kSourceOracle = 1e-5;
constexpr double kOracleSeconds = 60.0;
constexpr double kJump = 1e-8;
constexpr double kGreen = 1e-8;
constexpr double kReciprocity = 1e-8;
constexpr double kLosslessBalance = 1e-8;
constexpr double kDissipation = 1e-6;
constexpr double kConstantRel = 0.05;
constexpr double kLambdaRel = 0.05;
constexpr double kRemainderFactor = 2.0;
constexpr int kMonotoneFrom = 8;
constexpr double kGammaRel = 0.10;
constexpr double kBoundedSpread = 1.2;  // max/min of |v - u^i| in the gamma = 0 regime
constexpr double kEigen = 1e-10;
constexpr double kScaling = 1e-8;
constexpr double kRadius = 1e-8;
constexpr double kHausdorff = 0.1;
constexpr double kPerturbation = 1e-3;
constexpr double kJ01 = 2.404825557695773;
}  // namespace tol

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

std::string sci(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3e", v);
  return b;
}

ScattererConfig baseline(CurveShape shape, int N = 128) {
  ScattererConfig c;
  c.outer = make_curve(shape, N);
  c.k = 2.0;
  c.lambda = 2.0;
  c.n = 1.5;
  c.gamma = GammaProfile::constant(0.3);
  return c;
}

ScattererConfig unit_disk(double lambda, cplx n, GammaProfile g, double k = 1.0) {
  ScattererConfig c;
  c.outer = make_curve(CircleShape{1.0, Vec2::Zero()}, 64);
  c.k = k;
  c.lambda = lambda;
  c.n = n;
  c.gamma = std::move(g);
  return c;
}

void criterion1(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto angles = equispaced_angles(64);
  const std::vector<Incidence> incs = {plane_wave(0.5), PointSource{Vec2(1.6, 0.4)},
                                       Dipole{Vec2(-0.5, 1.5), Vec2(0.0, 1.0)}};
  double worst_plane = 0.0, worst_source = 0.0;
  int cases = 0;
  for (double lambda : {0.5, 1.0, 2.0})
    for (cplx gamma : {cplx(0.0), cplx(0.3), cplx(0.0, -0.2)})
      for (int ob = 0; ob < 3; ++ob) {
        RadialConfig rc;
        rc.k = 2.0;
        rc.lambda = lambda;
        rc.n = 1.5;
        rc.gamma = GammaProfile::constant(gamma);
        if (ob > 0) {
          rc.Rb = 0.4;
          rc.obstacle = ob == 1 ? ObstacleCondition::dirichlet() : ObstacleCondition::impedance(0.5);
        }
        const ForwardSolver solver(to_scatterer(rc, 192, 96), SolveOptions{false});
        for (std::size_t q = 0; q < incs.size(); ++q) {
          const double e = relative_l2(far_field(solver.solve(incs[q]), angles).values,
                                       series_far_field(series_solve(rc, incs[q]), angles).values);
          (q == 0 ? worst_plane : worst_source) = std::max(q == 0 ? worst_plane : worst_source, e);
          ++cases;
        }
      }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.detail << cases << " solves; plane " << sci(worst_plane) << " <= " << sci(tol::kPlaneOracle) << "; sources "
           << sci(worst_source) << " <= " << sci(tol::kSourceOracle) << "; " << sci(secs) << " s <= "
           << tol::kOracleSeconds << " s";
  o.require(worst_plane <= tol::kPlaneOracle, "plane-wave error");
  o.require(worst_source <= tol::kSourceOracle, "source error");
  o.require(secs <= tol::kOracleSeconds, "runtime");
}

void criterion2(Outcome& o) {
  double jump = 0.0, green = 0.0;
  for (const CurveShape& shape : {CurveShape{CircleShape{}}, CurveShape{KiteShape{}}}) {
    const auto c = make_curve(shape, 256);
    CVector d(c.size()), trace(c.size()), flux(c.size());
    const double k = 2.0, a = 0.7;
    const Vec2 dir(std::cos(a), std::sin(a));
    for (int i = 0; i < c.size(); ++i) {
      const double t = c.param(i);
      d[i] = std::exp(std::cos(t)) + cplx(0.0, 0.5) * std::sin(2 * t);
      trace[i] = std::exp(kI * (k * dir.dot(c.point(i))));
      flux[i] = kI * k * dir.dot(c.normal(i)) * trace[i];
    }
    for (const Kernel& ker : {Kernel::helmholtz(k), Kernel::static_kernel()})
      jump = std::max(jump, apply_jump_relations(c, d, ker, 32).max());
    // Green's representation of an interior plane wave; zero outside
    const std::vector<Vec2> inside = {Vec2(-0.3, 0.0), Vec2(0.2, 0.4), Vec2(-0.5, -0.3)};
    const std::vector<Vec2> outside = {Vec2(2.0, 0.0), Vec2(0.0, 2.5)};
    const Kernel ker = Kernel::helmholtz(k);
    const auto si = eval_potential(PotentialKind::Single, flux, c, inside, ker, false);
    const auto di = eval_potential(PotentialKind::Double, trace, c, inside, ker, false);
    for (std::size_t p = 0; p < inside.size(); ++p)
      green = std::max(green, std::abs(si.value[p] - di.value[p] - std::exp(kI * (k * dir.dot(inside[p])))));
    const auto so = eval_potential(PotentialKind::Single, flux, c, outside, ker, false);
    const auto dout = eval_potential(PotentialKind::Double, trace, c, outside, ker, false);
    for (std::size_t p = 0; p < outside.size(); ++p) green = std::max(green, std::abs(so.value[p] - dout.value[p]));
  }
  o.detail << "N=256 circle+kite; jumps " << sci(jump) << " <= " << sci(tol::kJump) << "; Green " << sci(green)
           << " <= " << sci(tol::kGreen);
  o.require(jump <= tol::kJump, "jump relations");
  o.require(green <= tol::kGreen, "Green's identity");
}

void criterion3(Outcome& o) {
  auto kite_ob = [](ObstacleCondition bc) {
    ScattererConfig c = baseline(KiteShape{1.0, Vec2::Zero()});
    c.obstacles = {make_curve(CircleShape{0.3, Vec2(0.1, 0.0)}, 64)};
    c.obstacle_conditions = {bc};
    return c;
  };
  ScattererConfig lossy = baseline(CircleShape{1.0, Vec2::Zero()});
  lossy.n = cplx(1.5, 0.4);
  lossy.gamma = GammaProfile::from_cos_sin({cplx(0.3, -0.2), 0.1}, {0.05});
  double recip = 0.0;
  for (const auto& c : {baseline(CircleShape{1.0, Vec2::Zero()}), kite_ob(ObstacleCondition::dirichlet()),
                        kite_ob(ObstacleCondition::neumann()), kite_ob(ObstacleCondition::impedance(0.7)), lossy})
    recip = std::max(recip, reciprocity_check(far_field_matrix(c, 16, 16)).max_rel);

  double lossless = 0.0;
  for (auto bc : {ObstacleCondition::neumann(), ObstacleCondition::dirichlet()}) {
    ScattererConfig c = kite_ob(bc);
    c.outer = c.outer.resampled(192);
    const auto a = energy_audit(solve_forward(c, plane_wave(0.2), {false}));
    lossless = std::max({lossless, a.balance_residual, std::abs(a.exterior_flux) / a.field_scale});
  }
  double dissip = 0.0;
  {  // impedance obstacle, rho > 0
    ScattererConfig c = baseline(CircleShape{1.0, Vec2::Zero()});
    c.obstacles = {make_curve(CircleShape{0.4, Vec2::Zero()}, 64)};
    c.obstacle_conditions = {ObstacleCondition::impedance(0.5)};
    const auto a = energy_audit(solve_forward(c, plane_wave(0.0), {false}));
    dissip = std::max(dissip, a.impedance_residual);
    o.require(a.obstacle_flux < 0.0, "impedance obstacle absorbs");
  }
  for (bool with_ob : {false, true}) {  // Im n > 0
    ScattererConfig c = baseline(CircleShape{1.0, Vec2::Zero()});
    c.n = cplx(1.5, 0.2);
    if (with_ob) {
      c.obstacles = {make_curve(CircleShape{0.4, Vec2::Zero()}, 64)};
      c.obstacle_conditions = {ObstacleCondition::neumann()};
    }
    const auto a = energy_audit(solve_forward(c, plane_wave(0.0), {false}));
    const double influx = -(a.exterior_flux - a.conductive_loss - a.obstacle_flux);
    dissip = std::max(dissip, std::abs(influx - a.dissipation) / a.dissipation);
    o.require(a.dissipation > 0.0, "positive dissipation");
  }
  o.detail << "reciprocity 16x16 " << sci(recip) << " <= " << sci(tol::kReciprocity) << "; lossless balance "
           << sci(lossless) << " <= " << sci(tol::kLosslessBalance) << "; dissipation " << sci(dissip) << " <= "
           << sci(tol::kDissipation);
  o.require(recip <= tol::kReciprocity, "reciprocity");
  o.require(lossless <= tol::kLosslessBalance, "lossless balance");
  o.require(dissip <= tol::kDissipation, "dissipation identities");
}

void criterion4(Outcome& o) {
  ExperimentOptions opt;
  opt.J = 64;
  ScattererConfig a = unit_disk(2.0, 1.5, GammaProfile::constant(0.3));
  ScattererConfig b = unit_disk(0.5, 1.5, GammaProfile::constant(0.2));
  b.obstacles = {make_curve(CircleShape{0.4, Vec2::Zero()}, 32)};
  b.obstacle_conditions = {ObstacleCondition::dirichlet()};
  for (const ScattererConfig* c : {&a, &b}) {
    const auto ex = run_point_source_experiment(*c, 0.0, opt);
    bool mono = true;
    for (int j = tol::kMonotoneFrom; j < opt.J; ++j) mono = mono && ex.records[j].vnorm_h1 > ex.records[j - 1].vnorm_h1;
    std::vector<double> rem;
    for (int j = tol::kMonotoneFrom - 1; j < opt.J; ++j) rem.push_back(ex.records[j].remainder_h1);
    std::vector<double> sorted = rem;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double med = sorted[sorted.size() / 2];
    double spread = 0.0;
    for (double r : rem) spread = std::max({spread, r / med, med / r});
    const double c_rel = std::abs(ex.c_final().real() - ex.expected_constant()) / ex.expected_constant();
    const double lam = recover_lambda_at_boundary(ex).value;
    const double lam_rel = std::abs(lam - c->lambda) / c->lambda;
    o.detail << "lambda=" << c->lambda << ": c " << sci(ex.c_final().real()) << " rel " << sci(c_rel)
             << ", lambda_hat " << sci(lam) << " rel " << sci(lam_rel) << ", remainder/median within " << sci(spread)
             << ", monotone " << (mono ? "yes" : "no") << "; ";
    o.require(mono, "monotone norm");
    o.require(spread <= tol::kRemainderFactor, "remainder plateau");
    o.require(c_rel <= tol::kConstantRel, "fitted constant");
    o.require(lam_rel <= tol::kLambdaRel, "lambda recovery");
  }
  o.detail << "tolerances 5%, factor 2, J=64";
}

void criterion5(Outcome& o) {
  ExperimentOptions opt;
  opt.J = 64;
  const GammaProfile profiles[] = {GammaProfile::constant(0.4), GammaProfile::from_cos_sin({0.3, 0.1}, {})};
  for (const auto& g : profiles) {
    const auto ex = run_dipole_experiment(unit_disk(1.0, 1.5, g), 0.0, opt);
    const double truth = g(0.0).real();
    const double rel = std::abs(ex.gamma_hat() - truth) / truth;
    o.detail << "gamma(x0)=" << truth << " (" << (g.is_constant() ? "const" : "Fourier") << "): gamma_hat "
             << sci(ex.gamma_hat()) << " rel " << sci(rel) << "; ";
    o.require(rel <= tol::kGammaRel, "gamma recovery");
  }
  const auto ex = run_dipole_experiment(unit_disk(1.0, 1.5, GammaProfile::constant(0.0)), 0.0, opt);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  bool grows = true;
  for (std::size_t j = 0; j < ex.records.size(); ++j) {
    lo = std::min(lo, ex.records[j].w_h1);
    hi = std::max(hi, ex.records[j].w_h1);
    if (j > 0) grows = grows && ex.records[j].incident_l2sq > ex.records[j - 1].incident_l2sq;
  }
  o.detail << "gamma=0: |v-u^i| max/min " << sci(hi / lo) << " <= " << tol::kBoundedSpread << ", |u^i|^2 increasing "
           << (grows ? "yes" : "no") << "; tolerance 10%, J=64";
  o.require(hi / lo <= tol::kBoundedSpread, "bounded remainder");
  o.require(grows, "incident growth");
}

void criterion6(Outcome& o) {
  // splitting interval by 10^3 samples
  const double b1 = 10.0, b2 = 0.5, rho = 3.0, q = 0.25 * (1 + b2) * (1 + b2);
  const auto iv = lemma31_feasible(b1, b2, rho).primary;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(iv.lo, iv.hi);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    double e = u(rng);
    while (e == iv.lo) e = u(rng);
    if (!(e < std::min(b2, 1.0) && e * b1 > q && e * rho > q)) ++bad;
  }
  o.require(iv.feasible() && bad == 0, "splitting samples");

  double eig = 0.0;
  for (double R : {0.3, 0.7, 1.0, 2.5}) {
    const double ref = std::pow(tol::kJ01 / R, 2);
    eig = std::max(eig, std::abs(dirichlet_eig_disk(R) - ref) / ref);
  }
  o.require(eig <= tol::kEigen, "Dirichlet eigenvalue");

  const double c1 = c1_disk(1.0);
  double lin = 0.0;
  for (double R : {0.25, 0.5, 2.0, 4.0}) lin = std::max(lin, std::abs(c1_disk(R) / c1 - R));
  o.require(lin <= tol::kScaling, "C1 linear scaling");

  int holding = 0;
  double min_bound = std::numeric_limits<double>::infinity();
  for (double k : {0.5, 1.0, 2.0})
    for (auto [n1, n2] : {std::pair{0.5, 1.0}, std::pair{2.0, 1.0}, std::pair{1.0, 3.0}})
      for (double eta : {-1.0, 0.0, 1.0, 10.0})
        for (double R : {0.3, 0.6, 1.0}) {
          const auto p = ItpParameters::constant(k, n1, n2, eta, R);
          if (!thm33_check(p).any()) continue;
          ++holding;
          min_bound = std::min(min_bound, coercivity_lower_bound(p, 32, 32).bound);
        }
  o.require(holding > 0 && min_bound > 0.0, "coercivity where a condition holds");

  double rmin = std::numeric_limits<double>::infinity();
  for (double k : {0.5, 2.0})
    for (double eta : {-2.0, 0.0, 0.3, 5.0})
      for (auto [n1, n2] : {std::pair{0.5, 1.0}, std::pair{3.0, 1.2}}) rmin = std::min(rmin, max_wellposed_radius(k, n1, n2, eta));
  o.require(rmin > 0.0, "positive radius");
  double closed_err = 0.0;
  for (auto [k, n2] : {std::pair{1.3, 1.7}, std::pair{0.8, 2.5}}) {
    const double closed = tol::kJ01 / (k * std::sqrt(n2));
    closed_err = std::max(closed_err, std::abs(max_wellposed_radius(k, 0.5, n2, 1.0) - closed) / closed);
  }
  o.require(closed_err <= tol::kRadius, "closed-form radius");
  o.detail << "splitting violations " << bad << "/1000; eigenvalue " << sci(eig) << " <= " << sci(tol::kEigen)
           << "; C1 scaling " << sci(lin) << " <= " << sci(tol::kScaling) << "; coercivity min " << sci(min_bound)
           << " over " << holding << " holding sets (32x32); radius min " << sci(rmin) << ", closed form "
           << sci(closed_err) << " <= " << sci(tol::kRadius);
}

void criterion7(Outcome& o) {
  const SearchBox box{-2.0, 2.0, -2.0, 2.0, 81, 81};
  auto contour = [&](const ScattererConfig& c) { return lsm_contour(lsm_indicator(far_field_matrix(c, 32, 32), box)); };
  const ScattererConfig disk = baseline(CircleShape{1.0, Vec2::Zero()});
  const ScattererConfig kite = baseline(KiteShape{1.0, Vec2::Zero()});
  const auto cd = contour(disk), ck = contour(kite);
  const double hd = hausdorff_to_curve(cd, disk.outer), hk = hausdorff_to_curve(ck, kite.outer);

  ScattererConfig with_ob = kite;
  with_ob.obstacles = {make_curve(CircleShape{0.3, Vec2(0.1, 0.0)}, 64)};
  with_ob.obstacle_conditions = {ObstacleCondition::neumann()};
  ScattererConfig moved = with_ob;
  moved.obstacles = {make_curve(CircleShape{0.3, Vec2(-0.2, 0.3)}, 64)};
  const double d_add = distinguishability(kite, with_ob, 32), d_move = distinguishability(with_ob, moved, 32);
  const auto c_ob = contour(with_ob), c_mv = contour(moved);
  const double shift = std::max(hausdorff_distance(ck, c_ob), hausdorff_distance(c_ob, c_mv));

  double dmin = std::numeric_limits<double>::infinity();
  for (int which = 0; which < 3; ++which) {
    ScattererConfig b = disk;
    if (which == 0) b.lambda *= 1.1;
    if (which == 1) b.gamma = GammaProfile::constant(0.33);
    if (which == 2) b.n *= 1.1;
    dmin = std::min(dmin, distinguishability(disk, b, 32));
  }
  o.detail << "Hausdorff disk " << sci(hd) << ", kite " << sci(hk) << " <= " << tol::kHausdorff
           << "; obstacle add/move data distance " << sci(d_add) << "/" << sci(d_move) << " > 0, contour shift "
           << sci(shift) << " <= " << tol::kHausdorff << "; 10% perturbation min distance " << sci(dmin) << " > "
           << sci(tol::kPerturbation);
  o.require(hd <= tol::kHausdorff && hk <= tol::kHausdorff, "LSM contour accuracy");
  o.require(d_add > 0.0 && d_move > 0.0, "obstacle visible in data");
  o.require(shift <= tol::kHausdorff, "contour ignores contents");
  o.require(dmin > tol::kPerturbation, "parameter perturbation");
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  std::string report;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--strict") strict = true;
    else if (a == "--report" && i + 1 < argc) report = argv[++i];
  }
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"oracle equivalence", criterion1},      {"jump relations and Green's identity", criterion2},
      {"reciprocity and energy", criterion3},  {"point-source singularity", criterion4},
      {"dipole conductivity", criterion5},     {"interior transmission suite", criterion6},
      {"inverse demonstration", criterion7}};
  std::ostringstream all;
  bool all_pass = true, evaluated = true;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    Outcome o;
    std::string status;
    try {
      criteria[c].second(o);
      status = o.pass ? "PASS" : "FAIL";
    } catch (const std::exception& e) {
      status = "ERROR";
      o.detail << " exception: " << e.what();
      evaluated = false;
    }
    all_pass = all_pass && status == "PASS";
    const std::string line = "criterion " + std::to_string(c + 1) + " " + status + " (" + criteria[c].first +
                             "): " + o.detail.str();
    std::cout << line << std::endl;
    all << line << '\n';
  }
  if (!report.empty()) std::ofstream(report) << all.str();
  if (!evaluated) return 2;
  return strict && !all_pass ? 1 : 0;
}
