// `conducta` command-line driver.  Exit codes: 0 ok, 1 invalid input,
// 2 numerical failure.
#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "conducta/forward.hpp"
#include "conducta/inverse.hpp"
#include "conducta/io.hpp"
#include "conducta/itp.hpp"
#include "conducta/oracle.hpp"
#include "conducta/singlab.hpp"

namespace conducta::cli {

using io::json;
namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kInvalid = 1, kNumerical = 2 };

struct Args {
  std::string config;
  std::string other;
  std::string out = ".";
  int N = 0;
  int J = 64;
  double delta = 0.0;
  int grid = 0;  // 0: per-command default
  double alpha = 1e-4;
  double noise = 0.0;
  unsigned long long seed = 0;
  std::optional<double> t0;
  std::string engine = "oracle";
};

inline int grid_or(const Args& a, int fallback) { return a.grid > 0 ? a.grid : fallback; }

inline json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

class Runner {
 public:
  Runner(const Args& a, std::ostream& out) : a_(a), out_(out) {}

  int run(const std::string& cmd) {
    manifest_.command = cmd;
    manifest_.config_path = a_.config;
    manifest_.out_dir = a_.out;
    manifest_.seed = a_.seed;
    if (cmd == "forward") forward();
    else if (cmd == "farfield-matrix") farfield_matrix();
    else if (cmd == "oracle-compare") oracle_compare();
    else if (cmd == "singularity") singularity(false);
    else if (cmd == "dipole") singularity(true);
    else if (cmd == "itp-check") itp_check();
    else if (cmd == "itp-radius") itp_radius();
    else if (cmd == "lsm") lsm();
    else if (cmd == "reciprocity") reciprocity();
    else if (cmd == "distinguish") distinguish();
    else if (cmd == "energy-audit") energy();
    manifest_.write();
    return kOk;
  }

 private:
  const json& doc() {
    if (!doc_) {
      if (a_.config.empty()) throw io::schema_error("--config is required");
      doc_ = io::read_json_file(a_.config);
    }
    return *doc_;
  }
  ScattererConfig scatterer() { return io::scatterer_from_json(doc(), a_.N); }
  Incidence incidence() {
    return doc().contains("incidence") ? io::incidence_from_json(doc().at("incidence")) : plane_wave(0.0);
  }
  fs::path path(const std::string& name) const { return fs::path(a_.out) / name; }
  void report(const json& j, const std::string& name) {
    const std::string s = j.dump(2) + "\n";
    out_ << s;
    io::write_atomic(path(name), s);
  }

  void forward() {
    const ScattererConfig cfg = scatterer();
    const ForwardSolver solver(cfg);
    const ForwardSolution sol = solver.solve(incidence());
    io::write_atomic(path("farfield.csv"), io::far_field_csv(far_field(sol, equispaced_angles(grid_or(a_, 64)))));
    // field on a box 1.5 times the outer bounding box, skipping a thin band around each curve
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : cfg.outer.points()) {
      xmin = std::min(xmin, p.x()), xmax = std::max(xmax, p.x());
      ymin = std::min(ymin, p.y()), ymax = std::max(ymax, p.y());
    }
    const Vec2 mid(0.5 * (xmin + xmax), 0.5 * (ymin + ymax));
    const double hx = 0.75 * (xmax - xmin), hy = 0.75 * (ymax - ymin);
    const int nf = doc().value("field_grid", 41);
    const double band = 0.02 * cfg.outer.diameter();
    std::vector<Vec2> pts, inside;
    std::vector<Region> regions;
    std::vector<int> idx;
    for (int j = 0; j < nf; ++j)
      for (int i = 0; i < nf; ++i) {
        const Vec2 p(mid.x() - hx + 2.0 * hx * i / (nf - 1), mid.y() - hy + 2.0 * hy * j / (nf - 1));
        bool near = cfg.outer.min_distance_to(p) < band;
        for (const auto& ob : cfg.obstacles) near = near || ob.min_distance_to(p) < band;
        if (near) continue;
        pts.push_back(p);
        regions.push_back(classify(cfg, p));
        if (regions.back() != Region::Obstacle) {
          idx.push_back(static_cast<int>(pts.size()) - 1);
          inside.push_back(p);
        }
      }
    const RegionFields f = scattered_and_transmitted(sol, inside, false);
    CVector vals = CVector::Zero(static_cast<int>(pts.size()));
    for (std::size_t q = 0; q < idx.size(); ++q) vals[idx[q]] = f.value[static_cast<int>(q)];
    io::write_atomic(path("field.csv"), io::field_csv(pts, regions, vals));
    report({{"condition", sol.condition},
            {"residual", sol.residual_norm},
            {"max_boundary_residual", sol.offnode.max()},
            {"normalization", kFarFieldNormalization}},
           "forward.json");
  }

  void farfield_matrix() {
    const int m = grid_or(a_, 16);
    const FarFieldMatrix F = io::parse_far_field_matrix_csv(
        io::far_field_matrix_csv(add_relative_noise(far_field_matrix(scatterer(), m, m), a_.noise, a_.seed)));
    io::write_atomic(path("farfield_matrix.csv"), io::far_field_matrix_csv(F));
  }

  void oracle_compare() {
    const ScattererConfig cfg = scatterer();
    const RadialConfig rc = radial_from_scatterer(cfg);
    const Incidence inc = incidence();
    const ForwardSolution sol = ForwardSolver(cfg).solve(inc);
    const auto angles = equispaced_angles(grid_or(a_, 128));
    const double err = relative_l2(far_field(sol, angles).values, series_far_field(series_solve(rc, inc), angles).values);
    report({{"config", a_.config},
            {"incidence", io::incidence_name(inc)},
            {"rel_l2_farfield", err},
            {"max_boundary_residual", sol.offnode.max()}},
           "oracle_compare.json");
  }

  void singularity(bool dipole) {
    const ScattererConfig cfg = scatterer();
    ExperimentOptions opt;
    opt.J = a_.J;
    opt.delta = a_.delta;
    if (a_.engine == "bie") opt.engine = Engine::Bie;
    else if (a_.engine != "oracle") throw io::schema_error("--engine must be oracle or bie");
    const double t0 = a_.t0 ? *a_.t0 : doc().value("t0", 0.0);
    const SingularityExperiment ex =
        dipole ? run_dipole_experiment(cfg, t0, opt) : run_point_source_experiment(cfg, t0, opt);
    std::ostringstream csv;
    csv << "j,c_fit,remainder_h1,vnorm_h1\n";
    for (const auto& r : ex.records)
      csv << r.j << ',' << io::fmt(r.c_fit.real()) << ',' << io::fmt(r.remainder_h1) << ',' << io::fmt(r.vnorm_h1)
          << '\n';
    io::write_atomic(path(dipole ? "dipole.csv" : "singularity.csv"), csv.str());
    json s = {{"t0", t0}, {"J", opt.J}, {"x0", {ex.ray.x0.x(), ex.ray.x0.y()}}, {"delta", ex.ray.delta}};
    if (dipole) {
      s["gamma_hat"] = ex.gamma_hat();
      s["gamma_true"] = cplx_json(ex.gamma0);
      s["slope"] = cplx_json(ex.slope);
    } else {
      const LambdaEstimate est = recover_lambda_at_boundary(ex);
      s["c_final"] = ex.c_final().real();
      s["c_expected"] = ex.expected_constant();
      s["lambda_hat"] = est.value;
      s["lambda_error"] = est.error;
      s["lambda_true"] = ex.lambda0;
    }
    report(s, dipole ? "dipole.json" : "singularity.json");
  }

  void itp_check() {
    const ItpParameters p = io::itp_from_json(doc());
    const WellPosednessReport rep = thm33_check(p);
    json conds = json::array();
    for (int c = 0; c < 6; ++c) {
      const auto& r = rep.conditions[c];
      conds.push_back({{"index", c + 1}, {"applicable", r.applicable}, {"holds", r.holds},
                       {"margin", std::isfinite(r.margin) ? json(r.margin) : json(nullptr)}});
    }
    json j = {{"conditions", conds},       {"any", rep.any()},
              {"first_holding", rep.first_holding()}, {"lambda1", rep.lambda1},
              {"c1_upper", rep.c1_upper},  {"c1_safety", rep.c1_safety},
              {"c_prime", rep.c_prime},    {"eta_margin", rep.eta_margin},
              {"admissible", rep.admissible}, {"note", rep.note}};
    if (p.n1() != p.n2()) {
      const int g = grid_or(a_, 32);
      const CoercivityEstimate est = coercivity_lower_bound(p, g, g);
      j["coercivity_bound"] = est.bound;
      j["coercivity_sign"] = est.sign;
    }
    report(j, "itp_check.json");
  }

  void itp_radius() {
    const ItpParameters p = io::itp_from_json(doc());
    const double r = max_wellposed_radius(p.k, p.n1(), p.n2(), p.eta);
    report({{"k", p.k}, {"n1", p.n1()}, {"n2", p.n2()}, {"eta", p.eta}, {"radius", r}}, "itp_radius.json");
  }

  void lsm() {
    const ScattererConfig cfg = scatterer();
    const int m = grid_or(a_, 32);
    const FarFieldMatrix F = add_relative_noise(far_field_matrix(cfg, m, m), a_.noise, a_.seed);
    SearchBox box;
    if (doc().contains("search_box")) {
      const json& b = doc().at("search_box");
      box.xmin = b.value("xmin", box.xmin), box.xmax = b.value("xmax", box.xmax);
      box.ymin = b.value("ymin", box.ymin), box.ymax = b.value("ymax", box.ymax);
      box.nx = b.value("nx", box.nx), box.ny = b.value("ny", box.ny);
    }
    const IndicatorField f = lsm_indicator(F, box, a_.alpha);
    std::ostringstream csv;
    csv << "x,y,indicator\n";
    for (int j = 0; j < box.ny; ++j)
      for (int i = 0; i < box.nx; ++i) csv << io::fmt(box.x(i)) << ',' << io::fmt(box.y(j)) << ',' << io::fmt(f.values(j, i)) << '\n';
    io::write_atomic(path("lsm.csv"), csv.str());
    const auto contour = lsm_contour(f);
    report({{"alpha", f.alpha},
            {"sigma_max", f.sigma_max},
            {"contour_points", contour.size()},
            {"hausdorff_outer", contour.empty() ? json(nullptr) : json(hausdorff_to_curve(contour, cfg.outer))}},
           "lsm.json");
  }

  void reciprocity() {
    const int m = grid_or(a_, 16);
    const ReciprocityReport r = reciprocity_check(far_field_matrix(scatterer(), m, m));
    report({{"max_abs", r.max_abs}, {"max_rel", r.max_rel}}, "reciprocity.json");
  }

  void distinguish() {
    if (a_.other.empty()) throw io::schema_error("distinguish needs --other");
    const ScattererConfig a = scatterer();
    const ScattererConfig b = io::load_scatterer(a_.other, a_.N);
    report({{"distance", distinguishability(a, b, grid_or(a_, 16))}}, "distinguish.json");
  }

  void energy() {
    const ScattererConfig cfg = scatterer();
    const EnergyAudit e = energy_audit(ForwardSolver(cfg, SolveOptions{false}).solve(incidence()));
    report({{"exterior_flux", e.exterior_flux},
            {"interface_flux", e.interface_flux},
            {"conductive_loss", e.conductive_loss},
            {"obstacle_flux", e.obstacle_flux},
            {"impedance_loss", e.impedance_loss},
            {"dissipation", e.dissipation},
            {"balance_residual", e.balance_residual},
            {"impedance_residual", e.impedance_residual},
            {"volume_computed", e.volume_computed}},
           "energy_audit.json");
  }

  const Args& a_;
  std::ostream& out_;
  std::optional<json> doc_;
  io::RunManifest manifest_;
};

inline const std::vector<std::pair<std::string, std::string>>& commands() {
  static const std::vector<std::pair<std::string, std::string>> c = {
      {"forward", "solve one incidence; far-field and field CSV"},
      {"farfield-matrix", "far-field matrix on an M x M direction grid"},
      {"oracle-compare", "BIE far field against the disk series solution"},
      {"singularity", "point sources approaching the boundary; recovers lambda"},
      {"dipole", "normal dipoles approaching the boundary (lambda = 1); recovers gamma"},
      {"itp-check", "well-posedness conditions of the interior transmission problem"},
      {"itp-radius", "largest well-posed disk radius"},
      {"lsm", "linear sampling indicator"},
      {"reciprocity", "reciprocity residual of the far-field matrix"},
      {"distinguish", "relative far-field distance between two configs (--other)"},
      {"energy-audit", "flux balance of one solve"}};
  return c;
}

inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"conducta: conductive transmission scattering with embedded obstacles"};
  app.require_subcommand(1);
  Args a;
  for (const auto& [name, desc] : commands()) {
    CLI::App* s = app.add_subcommand(name, desc);
    s->add_option("--config", a.config, "scatterer or ITP JSON");
    s->add_option("--out", a.out, "output directory");
    s->add_option("--N", a.N, "outer boundary nodes (obstacles N/2)");
    s->add_option("--J", a.J, "number of sources");
    s->add_option("--delta", a.delta, "first source distance (0: 5% of diam)");
    s->add_option("--grid", a.grid, "far-field angle count");
    s->add_option("--alpha", a.alpha, "Tikhonov parameter relative to sigma_max^2");
    s->add_option("--noise", a.noise, "relative far-field noise");
    s->add_option("--seed", a.seed, "noise seed");
    s->add_option("--t0", a.t0, "boundary parameter of x0");
    s->add_option("--engine", a.engine, "oracle or bie");
    s->add_option("--other", a.other, "second config for distinguish");
  }
  auto usage = [&] {
    err << app.help();
  };
  if (argc > 1 && argv[1][0] != '-') {
    bool known = false;
    for (const auto& c : commands()) known = known || c.first == argv[1];
    if (!known) {
      err << "error: unknown subcommand \"" << argv[1] << "\"\n";
      usage();
      return kInvalid;
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    usage();
    return kInvalid;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    return Runner(a, out).run(cmd);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::invalid_argument& e) {  // geometry and ITP input errors
    err << "validation error: " << e.what() << "\n";
    return kInvalid;
  } catch (const ResonanceError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
}

}  // namespace conducta::cli
