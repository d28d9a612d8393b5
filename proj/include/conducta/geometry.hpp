// Analytic closed curves, scatterer configurations and their validation.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "conducta/specfun.hpp"

namespace conducta {

// ---------------------------------------------------------------------------
// Shapes.  Each provides x(t), x'(t), x''(t) in closed form.

struct CircleShape {
  double radius = 1.0;
  Vec2 center = Vec2::Zero();
};

struct EllipseShape {
  double a = 1.0;
  double b = 0.5;
  Vec2 center = Vec2::Zero();
};

/// x(t) = c + s (cos t + 0.65 cos 2t - 0.65, 1.5 sin t)
struct KiteShape {
  double scale = 1.0;
  Vec2 center = Vec2::Zero();
};

/// r(t) = R (1 + amp cos(arms t))
struct StarShape {
  double radius = 1.0;
  double amp = 0.2;
  int arms = 5;
  Vec2 center = Vec2::Zero();
};

using CurveShape = std::variant<CircleShape, EllipseShape, KiteShape, StarShape>;

struct CurveJet {
  Vec2 x, dx, ddx;
};

inline CurveJet evaluate_shape(const CurveShape& shape, double t) {
  const double c = std::cos(t), s = std::sin(t);
  return std::visit(
      [&](const auto& sh) -> CurveJet {
        using T = std::decay_t<decltype(sh)>;
        if constexpr (std::is_same_v<T, CircleShape>) {
          const double r = sh.radius;
          return {sh.center + r * Vec2(c, s), r * Vec2(-s, c), r * Vec2(-c, -s)};
        } else if constexpr (std::is_same_v<T, EllipseShape>) {
          return {sh.center + Vec2(sh.a * c, sh.b * s), Vec2(-sh.a * s, sh.b * c),
                  Vec2(-sh.a * c, -sh.b * s)};
        } else if constexpr (std::is_same_v<T, KiteShape>) {
          const double c2 = std::cos(2 * t), s2 = std::sin(2 * t), q = sh.scale;
          return {sh.center + q * Vec2(c + 0.65 * c2 - 0.65, 1.5 * s),
                  q * Vec2(-s - 1.3 * s2, 1.5 * c), q * Vec2(-c - 2.6 * c2, -1.5 * s)};
        } else {
          const double m = sh.arms;
          const double r = sh.radius * (1.0 + sh.amp * std::cos(m * t));
          const double dr = -sh.radius * sh.amp * m * std::sin(m * t);
          const double ddr = -sh.radius * sh.amp * m * m * std::cos(m * t);
          const Vec2 e(c, s), ep(-s, c);
          return {sh.center + r * e, dr * e + r * ep, (ddr - r) * e + 2.0 * dr * ep};
        }
      },
      shape);
}

inline std::string shape_kind(const CurveShape& shape) {
  static const char* names[] = {"circle", "ellipse", "kite", "star"};
  return names[shape.index()];
}

// ---------------------------------------------------------------------------

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CurveFrame {
  Vec2 point;
  Vec2 normal;   // outward unit normal
  Vec2 tangent;  // unit tangent, counterclockwise
  double speed;
  double curvature;
};

inline CurveFrame frame_from_jet(const CurveJet& jet) {
  const double speed = jet.dx.norm();
  const Vec2 tangent = jet.dx / speed;
  const Vec2 normal(tangent.y(), -tangent.x());
  const double cross = jet.dx.x() * jet.ddx.y() - jet.dx.y() * jet.ddx.x();
  return {jet.x, normal, tangent, speed, cross / (speed * speed * speed)};
}

/// Smooth closed counterclockwise curve sampled at t_i = 2 pi i / N.
class BoundaryCurve {
 public:
  BoundaryCurve() = default;

  BoundaryCurve(CurveShape shape, int n) : shape_(std::move(shape)), n_(n) {
    if (n < 16 || n % 2 != 0)
      throw GeometryError("node count must be even and at least 16, got " + std::to_string(n));
    params_.resize(n);
    points_.resize(n);
    d1_.resize(n);
    d2_.resize(n);
    normals_.resize(n);
    speed_.resize(n);
    curvature_.resize(n);
    for (int i = 0; i < n; ++i) {
      params_[i] = kPi * i / (n / 2);
      const CurveJet jet = evaluate_shape(shape_, params_[i]);
      const CurveFrame f = frame_from_jet(jet);
      points_[i] = jet.x;
      d1_[i] = jet.dx;
      d2_[i] = jet.ddx;
      normals_[i] = f.normal;
      speed_[i] = f.speed;
      curvature_[i] = f.curvature;
    }
    check_simple();
  }

  int size() const { return n_; }
  const CurveShape& shape() const { return shape_; }
  double param(int i) const { return params_[i]; }
  const Vec2& point(int i) const { return points_[i]; }
  const Vec2& d1(int i) const { return d1_[i]; }
  const Vec2& d2(int i) const { return d2_[i]; }
  const Vec2& normal(int i) const { return normals_[i]; }
  double speed(int i) const { return speed_[i]; }
  double curvature(int i) const { return curvature_[i]; }
  const std::vector<Vec2>& points() const { return points_; }

  /// Same analytic curve at a different node count.
  BoundaryCurve resampled(int n) const { return BoundaryCurve(shape_, n); }

  double perimeter() const {
    double s = 0.0;
    for (double v : speed_) s += v;
    return s * 2.0 * kPi / n_;
  }

  /// Green's theorem: (1/2) int (x y' - y x') dt.
  double area() const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i)
      s += points_[i].x() * d1_[i].y() - points_[i].y() * d1_[i].x();
    return 0.5 * s * 2.0 * kPi / n_;
  }

  double diameter() const {
    double d = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) d = std::max(d, (points_[i] - points_[j]).norm());
    return d;
  }

  double min_distance_to(const Vec2& p) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& q : points_) d = std::min(d, (q - p).norm());
    return d;
  }

  /// Winding number of the node polygon around p.
  int winding_number(const Vec2& p) const {
    double total = 0.0;
    for (int i = 0; i < n_; ++i) {
      const Vec2 a = points_[i] - p, b = points_[(i + 1) % n_] - p;
      total += std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
    }
    return static_cast<int>(std::lround(total / (2.0 * kPi)));
  }

  bool contains(const Vec2& p) const { return winding_number(p) != 0; }

 private:
  void check_simple() const {
    if (area() <= 0.0) throw GeometryError("curve is not counterclockwise");
    auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) {
      return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
    };
    for (int i = 0; i < n_; ++i) {
      const Vec2& a = points_[i];
      const Vec2& b = points_[(i + 1) % n_];
      for (int j = i + 2; j < n_; ++j) {
        if (i == 0 && j == n_ - 1) continue;
        const Vec2& c = points_[j];
        const Vec2& d = points_[(j + 1) % n_];
        if ((a - c).norm() == 0.0) throw GeometryError("curve nodes coincide");
        const double o1 = orient(a, b, c), o2 = orient(a, b, d);
        const double o3 = orient(c, d, a), o4 = orient(c, d, b);
        if (o1 * o2 < 0.0 && o3 * o4 < 0.0) throw GeometryError("self-intersection detected");
      }
    }
  }

  CurveShape shape_;
  int n_ = 0;
  std::vector<double> params_;
  std::vector<Vec2> points_, d1_, d2_, normals_;
  std::vector<double> speed_, curvature_;
};

inline BoundaryCurve make_curve(const CurveShape& shape, int n) { return BoundaryCurve(shape, n); }

/// Frame at an arbitrary parameter, evaluated analytically.
inline CurveFrame curve_frame(const BoundaryCurve& curve, double t) {
  return frame_from_jet(evaluate_shape(curve.shape(), t));
}

// ---------------------------------------------------------------------------
// Conductivity profile gamma(t): trigonometric polynomial in the outer
// curve parameter.  coeffs[l + L] multiplies e^{i l t}.

class GammaProfile {
 public:
  GammaProfile() : coeffs_{cplx{0.0}} {}
  static GammaProfile constant(cplx value) {
    GammaProfile g;
    g.coeffs_ = {value};
    return g;
  }
  static GammaProfile from_fourier(std::vector<cplx> coeffs) {
    if (coeffs.size() % 2 == 0) throw std::invalid_argument("gamma Fourier table must have odd length");
    GammaProfile g;
    g.coeffs_ = std::move(coeffs);
    return g;
  }
  /// a0 + sum_l (a_l cos lt + b_l sin lt)
  static GammaProfile from_cos_sin(const std::vector<cplx>& cos_terms, const std::vector<cplx>& sin_terms) {
    const std::size_t len = std::max(cos_terms.size(), sin_terms.size() + 1);
    const int band = static_cast<int>(len) - 1;
    std::vector<cplx> c(2 * band + 1, cplx{0.0});
    c[band] = cos_terms.empty() ? cplx{0.0} : cos_terms[0];
    for (int l = 1; l <= band; ++l) {
      const cplx a = l < static_cast<int>(cos_terms.size()) ? cos_terms[l] : cplx{0.0};
      const cplx b = l - 1 < static_cast<int>(sin_terms.size()) ? sin_terms[l - 1] : cplx{0.0};
      c[band + l] = 0.5 * (a - kI * b);
      c[band - l] = 0.5 * (a + kI * b);
    }
    return from_fourier(std::move(c));
  }
  /// Samples at t_i = 2 pi i / N; exact for band-limited data.
  static GammaProfile from_samples(const std::vector<cplx>& samples) {
    const int n = static_cast<int>(samples.size());
    const int band = n / 2 - 1;
    std::vector<cplx> c(2 * band + 1);
    for (int l = -band; l <= band; ++l) {
      cplx s{0.0};
      for (int i = 0; i < n; ++i) s += samples[i] * std::exp(-kI * (2.0 * kPi * l * i / n));
      c[l + band] = s / static_cast<double>(n);
    }
    // drop negligible high harmonics so downstream mode coupling stays narrow
    double cmax = 0.0;
    for (auto v : c) cmax = std::max(cmax, std::abs(v));
    int keep = band;
    while (keep > 0 && std::abs(c[band + keep]) <= 1e-14 * cmax && std::abs(c[band - keep]) <= 1e-14 * cmax)
      --keep;
    return from_fourier(std::vector<cplx>(c.begin() + (band - keep), c.begin() + (band + keep + 1)));
  }

  int band() const { return static_cast<int>(coeffs_.size() / 2); }
  cplx coeff(int l) const {
    const int b = band();
    return std::abs(l) > b ? cplx{0.0} : coeffs_[l + b];
  }
  bool is_constant() const { return band() == 0; }

  cplx operator()(double t) const {
    cplx s{0.0};
    const int b = band();
    for (int l = -b; l <= b; ++l) s += coeffs_[l + b] * std::exp(kI * (l * t));
    return s;
  }

  std::vector<cplx> samples(const BoundaryCurve& curve) const {
    std::vector<cplx> out(curve.size());
    for (int i = 0; i < curve.size(); ++i) out[i] = (*this)(curve.param(i));
    return out;
  }

 private:
  std::vector<cplx> coeffs_;
};

// ---------------------------------------------------------------------------

enum class ObstacleType { Dirichlet, Neumann, Impedance };

struct ObstacleCondition {
  ObstacleType type = ObstacleType::Neumann;
  double rho = 0.0;  // impedance: dv/dnu + i rho v = 0

  static ObstacleCondition dirichlet() { return {ObstacleType::Dirichlet, 0.0}; }
  static ObstacleCondition neumann() { return {ObstacleType::Neumann, 0.0}; }
  static ObstacleCondition impedance(double rho) { return {ObstacleType::Impedance, rho}; }

  /// Neumann is the rho = 0 impedance condition.
  double effective_rho() const { return type == ObstacleType::Impedance ? rho : 0.0; }
};

struct ScattererConfig {
  BoundaryCurve outer;
  std::vector<BoundaryCurve> obstacles;
  std::vector<ObstacleCondition> obstacle_conditions;
  double k = 1.0;
  double lambda = 1.0;
  cplx n{1.0};
  GammaProfile gamma;

  /// Interior wavenumber k sqrt(n / lambda), branch with Im >= 0.
  cplx interior_wavenumber() const {
    cplx kint = k * std::sqrt(n / lambda);
    if (kint.imag() < 0.0) kint = -kint;
    return kint;
  }
};

struct PlaneWave {
  Vec2 direction;
};
struct PointSource {
  Vec2 location;
};
struct Dipole {
  Vec2 location;
  Vec2 axis;
};
using Incidence = std::variant<PlaneWave, PointSource, Dipole>;

inline Incidence plane_wave(double angle) { return PlaneWave{Vec2(std::cos(angle), std::sin(angle))}; }

struct ValidationIssue {
  std::string code;  // "containment", "overlap", "conductive sign", ...
  int component = -1;
  std::string message;
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<ValidationIssue> issues)
      : std::runtime_error(render(issues)), issues_(std::move(issues)) {}
  const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  static std::string render(const std::vector<ValidationIssue>& issues) {
    std::ostringstream os;
    os << "invalid scatterer:";
    for (const auto& i : issues) {
      os << " [" << i.code;
      if (i.component >= 0) os << " @" << i.component;
      os << "] " << i.message << ";";
    }
    return os.str();
  }
  std::vector<ValidationIssue> issues_;
};

namespace detail {

inline double curve_distance(const BoundaryCurve& a, const BoundaryCurve& b) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& p : a.points()) d = std::min(d, b.min_distance_to(p));
  return d;
}

}  // namespace detail

/// Checks every standing assumption; throws ValidationError listing all
/// violations.
inline const ScattererConfig& validate_scatterer(const ScattererConfig& cfg) {
  std::vector<ValidationIssue> issues;
  if (!(cfg.k > 0.0)) issues.push_back({"sign", -1, "wavenumber k must be positive"});
  if (!(cfg.lambda > 0.0)) issues.push_back({"sign", -1, "lambda must be positive"});
  if (!(cfg.n.real() > 0.0)) issues.push_back({"sign", -1, "Re(n) must be positive"});
  if (cfg.n.imag() < 0.0) issues.push_back({"sign", -1, "Im(n) must be nonnegative"});
  const auto g = cfg.gamma.samples(cfg.outer);
  for (int i = 0; i < static_cast<int>(g.size()); ++i) {
    if (g[i].imag() > 1e-14) {
      issues.push_back({"conductive sign", i, "Im(gamma) must be <= 0 (node " + std::to_string(i) + ")"});
      break;
    }
  }
  if (cfg.obstacle_conditions.size() != cfg.obstacles.size())
    issues.push_back({"schema", -1, "one obstacle condition per obstacle component required"});
  const double clearance = 1e-3 * cfg.outer.diameter();
  for (int j = 0; j < static_cast<int>(cfg.obstacles.size()); ++j) {
    const auto& ob = cfg.obstacles[j];
    bool inside = true;
    for (const auto& p : ob.points())
      if (!cfg.outer.contains(p)) { inside = false; break; }
    if (!inside || detail::curve_distance(ob, cfg.outer) < clearance)
      issues.push_back({"containment", j, "obstacle must lie strictly inside the outer curve"});
    for (int l = j + 1; l < static_cast<int>(cfg.obstacles.size()); ++l) {
      const auto& other = cfg.obstacles[l];
      const bool nested = other.contains(ob.point(0)) || ob.contains(other.point(0));
      if (nested || detail::curve_distance(ob, other) < clearance)
        issues.push_back({"overlap", j, "obstacles " + std::to_string(j) + " and " + std::to_string(l) +
                                            " intersect or touch"});
    }
    if (j < static_cast<int>(cfg.obstacle_conditions.size()) &&
        cfg.obstacle_conditions[j].type == ObstacleType::Impedance && cfg.obstacle_conditions[j].rho < 0.0)
      issues.push_back({"sign", j, "impedance rho must be nonnegative"});
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return cfg;
}

inline std::optional<Vec2> source_location(const Incidence& inc) {
  if (auto p = std::get_if<PointSource>(&inc)) return p->location;
  if (auto d = std::get_if<Dipole>(&inc)) return d->location;
  return std::nullopt;
}

/// Source incidences must sit outside the closed outer domain.
inline void validate_incidence(const ScattererConfig& cfg, const Incidence& inc) {
  std::vector<ValidationIssue> issues;
  if (auto pw = std::get_if<PlaneWave>(&inc)) {
    if (std::abs(pw->direction.norm() - 1.0) > 1e-12) issues.push_back({"incidence", -1, "direction must be unit"});
  } else if (auto dp = std::get_if<Dipole>(&inc); dp && std::abs(dp->axis.norm() - 1.0) > 1e-12) {
    issues.push_back({"incidence", -1, "dipole axis must be unit"});
  }
  if (auto z = source_location(inc)) {
    if (cfg.outer.contains(*z) || cfg.outer.min_distance_to(*z) == 0.0)
      issues.push_back({"source-inside-D", -1, "source location must lie outside the closed scatterer"});
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

}  // namespace conducta
