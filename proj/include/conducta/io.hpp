// JSON configs, CSV tables and run manifests.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "conducta/forward.hpp"
#include "conducta/geometry.hpp"
#include "conducta/inverse.hpp"
#include "conducta/itp.hpp"

namespace conducta::io {

using nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

inline ValidationError schema_error(const std::string& msg) { return ValidationError({{"schema", -1, msg}}); }

inline const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw schema_error(std::string("missing key \"") + key + "\"");
  return j.at(key);
}

inline double number(const json& j, const char* what) {
  if (!j.is_number()) throw schema_error(std::string(what) + " must be a number");
  return j.get<double>();
}

/// Accepts 1.5, [1.5, 0.2] or {"re": 1.5, "im": 0.2}.
inline cplx complex_value(const json& j, const char* what) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  if (j.is_object() && j.contains("re")) return {number(j.at("re"), what), j.contains("im") ? number(j.at("im"), what) : 0.0};
  throw schema_error(std::string(what) + " must be a number or [re, im]");
}

inline Vec2 vec2(const json& j, const char* what) {
  if (!(j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()))
    throw schema_error(std::string(what) + " must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <class T>
T param_or(const json& params, const char* key, T fallback) {
  if (!params.contains(key)) return fallback;
  if constexpr (std::is_same_v<T, Vec2>) {
    return vec2(params.at(key), key);
  } else if constexpr (std::is_same_v<T, int>) {
    if (!params.at(key).is_number_integer()) throw schema_error(std::string(key) + " must be an integer");
    return params.at(key).get<int>();
  } else {
    return number(params.at(key), key);
  }
}

inline CurveShape shape_from_json(const json& j) {
  const json& kind_j = require(j, "kind");
  if (!kind_j.is_string()) throw schema_error("curve kind must be a string");
  const std::string kind = kind_j.get<std::string>();
  const json params = j.contains("params") ? j.at("params") : json::object();
  if (!params.is_object()) throw schema_error("curve params must be an object");
  const Vec2 c = param_or<Vec2>(params, "center", Vec2::Zero());
  if (kind == "circle") return CircleShape{param_or(params, "radius", 1.0), c};
  if (kind == "ellipse") return EllipseShape{param_or(params, "a", 1.0), param_or(params, "b", 0.5), c};
  if (kind == "kite") return KiteShape{param_or(params, "scale", 1.0), c};
  if (kind == "star")
    return StarShape{param_or(params, "radius", 1.0), param_or(params, "amp", 0.2), param_or<int>(params, "arms", 5), c};
  throw schema_error("unknown curve kind \"" + kind + "\"");
}

inline json shape_to_json(const CurveShape& shape) {
  auto v2 = [](const Vec2& v) { return json::array({v.x(), v.y()}); };
  json out;
  out["kind"] = shape_kind(shape);
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, CircleShape>) out["params"] = {{"radius", s.radius}, {"center", v2(s.center)}};
        if constexpr (std::is_same_v<S, EllipseShape>)
          out["params"] = {{"a", s.a}, {"b", s.b}, {"center", v2(s.center)}};
        if constexpr (std::is_same_v<S, KiteShape>) out["params"] = {{"scale", s.scale}, {"center", v2(s.center)}};
        if constexpr (std::is_same_v<S, StarShape>)
          out["params"] = {{"radius", s.radius}, {"amp", s.amp}, {"arms", s.arms}, {"center", v2(s.center)}};
      },
      shape);
  return out;
}

inline BoundaryCurve curve_from_json(const json& j, int default_n) {
  const int n = j.contains("N") ? param_or<int>(j, "N", default_n) : default_n;
  if (n < 8 || n % 2 != 0) throw schema_error("curve N must be an even integer >= 8");
  return make_curve(shape_from_json(j), n);
}

inline ObstacleCondition condition_from_json(const json& j) {
  const json& t = require(j, "type");
  if (!t.is_string()) throw schema_error("obstacle condition type must be a string");
  const std::string type = t.get<std::string>();
  if (type == "dirichlet") return ObstacleCondition::dirichlet();
  if (type == "neumann") return ObstacleCondition::neumann();
  if (type == "impedance") return ObstacleCondition::impedance(number(require(j, "rho"), "rho"));
  throw schema_error("unknown obstacle condition \"" + type + "\"");
}

/// "const": value is a number or [re, im].  "samples": value lists gamma at
/// t_i = 2 pi i / N on the outer parameter.
inline GammaProfile gamma_from_json(const json& j) {
  const std::string kind = require(j, "kind").get<std::string>();
  const json& v = require(j, "value");
  if (kind == "const") return GammaProfile::constant(complex_value(v, "gamma value"));
  if (kind == "samples") {
    if (!v.is_array() || v.size() < 4 || v.size() % 2 != 0)
      throw schema_error("gamma samples must be an even-length array with at least 4 entries");
    std::vector<cplx> s;
    for (const auto& e : v) s.push_back(complex_value(e, "gamma sample"));
    return GammaProfile::from_samples(s);
  }
  throw schema_error("unknown gamma kind \"" + kind + "\"");
}

/// Parses and validates.  `n_override` > 0 replaces the outer N (obstacles get N/2).
inline ScattererConfig scatterer_from_json(const json& j, int n_override = 0) {
  if (!j.is_object()) throw schema_error("config must be a JSON object");
  ScattererConfig cfg;
  cfg.outer = curve_from_json(require(j, "outer"), 128);
  if (j.contains("obstacles")) {
    const json& obs = j.at("obstacles");
    if (!obs.is_array()) throw schema_error("obstacles must be an array");
    for (const auto& o : obs) cfg.obstacles.push_back(curve_from_json(o, cfg.outer.size() / 2));
  }
  if (j.contains("obstacle_condition")) {
    const json& oc = j.at("obstacle_condition");
    if (!oc.is_array()) throw schema_error("obstacle_condition must be an array");
    for (const auto& c : oc) cfg.obstacle_conditions.push_back(condition_from_json(c));
  }
  cfg.k = number(require(j, "k"), "k");
  cfg.lambda = j.contains("lambda") ? number(j.at("lambda"), "lambda") : 1.0;
  cfg.n = j.contains("n") ? complex_value(j.at("n"), "n") : cplx{1.0};
  if (j.contains("gamma")) cfg.gamma = gamma_from_json(j.at("gamma"));
  if (n_override > 0) {
    if (n_override < 8 || n_override % 2 != 0) throw schema_error("--N must be an even integer >= 8");
    const int nb = std::max(16, n_override / 2 + (n_override / 2) % 2);
    cfg = with_resolution(cfg, n_override, nb);
  }
  validate_scatterer(cfg);
  return cfg;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError({{"io", -1, "cannot open config " + path.string()}});
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw schema_error(path.string() + ": " + e.what());
  }
}

inline ScattererConfig load_scatterer(const std::filesystem::path& path, int n_override = 0) {
  return scatterer_from_json(read_json_file(path), n_override);
}

/// {"kind": "plane", "angle": a} | {"kind": "point", "location": [x, y]}
/// | {"kind": "dipole", "location": [x, y], "axis": [ax, ay]}
inline Incidence incidence_from_json(const json& j) {
  const std::string kind = require(j, "kind").get<std::string>();
  if (kind == "plane") {
    if (j.contains("direction")) return PlaneWave{vec2(j.at("direction"), "direction")};
    return plane_wave(j.contains("angle") ? number(j.at("angle"), "angle") : 0.0);
  }
  if (kind == "point") return PointSource{vec2(require(j, "location"), "location")};
  if (kind == "dipole") return Dipole{vec2(require(j, "location"), "location"), vec2(require(j, "axis"), "axis")};
  throw schema_error("unknown incidence kind \"" + kind + "\"");
}

inline std::string incidence_name(const Incidence& inc) {
  if (std::holds_alternative<PlaneWave>(inc)) return "plane";
  if (std::holds_alternative<PointSource>(inc)) return "point";
  return "dipole";
}

/// {"k", "n1", "n2", "eta", "R"} with optional inf/sup pairs "n1_range", "n2_range".
inline ItpParameters itp_from_json(const json& j) {
  const json& src = j.contains("itp") ? j.at("itp") : j;
  ItpParameters p = ItpParameters::constant(number(require(src, "k"), "k"), number(require(src, "n1"), "n1"),
                                            number(require(src, "n2"), "n2"),
                                            src.contains("eta") ? number(src.at("eta"), "eta") : 0.0,
                                            src.contains("R") ? number(src.at("R"), "R") : 1.0);
  if (src.contains("n1_range")) {
    const Vec2 r = vec2(src.at("n1_range"), "n1_range");
    p.n1_inf = r.x();
    p.n1_sup = r.y();
  }
  if (src.contains("n2_range")) {
    const Vec2 r = vec2(src.at("n2_range"), "n2_range");
    p.n2_inf = r.x();
    p.n2_sup = r.y();
  }
  if (src.contains("delta1")) p.delta1 = number(src.at("delta1"), "delta1");
  return p;
}

// ---------------------------------------------------------------------------
// Output.

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Temp file in the target directory, then rename.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string far_field_csv(const FarFieldPattern& p) {
  std::ostringstream os;
  os << "theta,re_uinf,im_uinf\n";
  for (std::size_t i = 0; i < p.angles.size(); ++i) {
    const cplx v = p.values[static_cast<int>(i)];
    os << fmt(p.angles[i]) << ',' << fmt(v.real()) << ',' << fmt(v.imag()) << '\n';
  }
  return os.str();
}

inline const char* region_name(Region r) {
  switch (r) {
    case Region::Exterior: return "exterior";
    case Region::Interior: return "interior";
    default: return "obstacle";
  }
}

/// Obstacle points carry nan (no field is defined there).
inline std::string field_csv(const std::vector<Vec2>& points, const std::vector<Region>& regions, const CVector& values) {
  std::ostringstream os;
  os << "x,y,region,re,im\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    os << fmt(points[i].x()) << ',' << fmt(points[i].y()) << ',' << region_name(regions[i]) << ',';
    if (regions[i] == Region::Obstacle)
      os << "nan,nan\n";
    else
      os << fmt(values[static_cast<int>(i)].real()) << ',' << fmt(values[static_cast<int>(i)].imag()) << '\n';
  }
  return os.str();
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

inline std::string far_field_matrix_csv(const FarFieldMatrix& F) {
  std::ostringstream os;
  os << "# normalization: " << F.normalization << '\n';
  os << "# k: " << fmt(F.k) << '\n';
  os << "# observations: " << join(F.observations) << '\n';
  os << "# incidences: " << join(F.incidences) << '\n';
  os << "theta_index,d_index,re,im\n";
  for (int i = 0; i < F.rows(); ++i)
    for (int j = 0; j < F.cols(); ++j)
      os << i << ',' << j << ',' << fmt(F.values(i, j).real()) << ',' << fmt(F.values(i, j).imag()) << '\n';
  return os.str();
}

inline std::vector<double> split_numbers(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

inline FarFieldMatrix parse_far_field_matrix_csv(const std::string& text) {
  FarFieldMatrix F;
  std::istringstream in(text);
  std::string line;
  auto after = [](const std::string& l, const std::string& tag) { return l.substr(tag.size()); };
  std::vector<std::array<double, 4>> rows;
  while (std::getline(in, line)) {
    if (line.rfind("# normalization: ", 0) == 0) F.normalization = after(line, "# normalization: ");
    else if (line.rfind("# k: ", 0) == 0) F.k = std::stod(after(line, "# k: "));
    else if (line.rfind("# observations: ", 0) == 0) F.observations = split_numbers(after(line, "# observations: "));
    else if (line.rfind("# incidences: ", 0) == 0) F.incidences = split_numbers(after(line, "# incidences: "));
    else if (line.empty() || line[0] == '#' || line.rfind("theta_index", 0) == 0) continue;
    else {
      const auto v = split_numbers(line);
      if (v.size() != 4) throw schema_error("far-field matrix row must have 4 columns");
      rows.push_back({v[0], v[1], v[2], v[3]});
    }
  }
  F.values = CMatrix::Zero(F.rows(), F.cols());
  if (static_cast<int>(rows.size()) != F.rows() * F.cols()) throw schema_error("far-field matrix row count mismatch");
  for (const auto& r : rows) {
    const int i = static_cast<int>(r[0]), j = static_cast<int>(r[1]);
    if (i < 0 || j < 0 || i >= F.rows() || j >= F.cols()) throw schema_error("far-field matrix index out of range");
    F.values(i, j) = {r[2], r[3]};
  }
  validate_far_field_matrix(F);
  return F;
}

struct RunManifest {
  std::string command;
  std::string config_path;
  std::string out_dir;
  unsigned long long seed = 0;
  std::string version = kVersion;
  std::string normalization = kFarFieldNormalization;

  json to_json() const {
    return {{"command", command}, {"config", config_path}, {"out", out_dir},
            {"seed", seed},       {"version", version},    {"normalization", normalization}};
  }
  void write() const { write_atomic(std::filesystem::path(out_dir) / "manifest.json", to_json().dump(2) + "\n"); }
};

}  // namespace conducta::io
