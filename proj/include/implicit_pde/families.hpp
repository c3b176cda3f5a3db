// SPDX-License-Identifier: MIT
#pragma once

#include <implicit_pde/errors.hpp>
#include <implicit_pde/eval.hpp>
#include <implicit_pde/expr.hpp>
#include <implicit_pde/implicit_field.hpp>
#include <implicit_pde/quad_ansatz.hpp>
#include <implicit_pde/random.hpp>
#include <implicit_pde/residuals.hpp>

#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace implicit_pde {

/// t F(phi) + x G(phi) = 1 over coordinates (t, x).
struct BatemanSpec {
  Expr f;
  Expr g;
};

/// sum_i F_i(phi) x_i = c over x1..xn.
struct LinearSpec {
  std::vector<Expr> f;
  double c = 1.0;
};

/// sum_ij M_ij(phi) x_i x_j = 1 over x1..xn.
struct QuadraticSpec {
  SymFuncMatrix m;
};

/// F(x, y, phi) = G(z, w, phi) over (x, y, z, w). closed_form, when known, is
/// phi as an explicit expression and replaces the root solve.
struct ChaundySpec {
  Expr f;
  Expr g;
  std::optional<Expr> closed_form;
};

/// phi = F(f(x, y), g(z, w)); F is written in u, v.
struct ExplicitComplexSpec {
  Expr outer;
  Expr f;
  Expr g;
};

/// x^2/a2(phi) + y^2/b2(phi) + z^2/c2(phi) = 1. The confocal system has
/// a2 = a^2 + phi, b2 = b^2 + phi, c2 = c^2 + phi.
struct EllipsoidalSpec {
  Expr a2;
  Expr b2;
  Expr c2;
  double level = 1.0;
  int points = 50;

  static EllipsoidalSpec confocal(double a_sq, double b_sq, double c_sq, double level = 1.0, int points = 50) {
    const Expr phi = Expr::variable("phi");
    return {Expr::constant(a_sq) + phi, Expr::constant(b_sq) + phi, Expr::constant(c_sq) + phi, level, points};
  }
};

enum class ASurfaceTarget {
  monge_ampere,  ///< det Hess_x A = 0, expected to give the UFE
  bateman2d,     ///< two-dimensional Bateman equation in A, expected to give f12+f23+f13 = 0
};

/// t = A(phi, x1, ..., x_{n-1}) over (x1, ..., x_{n-1}, t).
struct ASurfaceSpec {
  Expr a;
  std::size_t n = 3;
  ASurfaceTarget target = ASurfaceTarget::monge_ampere;
};

/// Explicit field phi = e(x1, ..., xn), checked for homogeneity of the given degree.
struct ExplicitExprSpec {
  Expr e;
  std::size_t n = 3;
  double degree = 0.0;
};

using FamilySpec = std::variant<BatemanSpec, LinearSpec, QuadraticSpec, ChaundySpec, ExplicitComplexSpec,
                                EllipsoidalSpec, ASurfaceSpec, ExplicitExprSpec>;

inline std::string kind_name(const FamilySpec& spec) {
  static constexpr const char* names[] = {"bateman", "linear",    "quadratic", "chaundy",
                                          "explicit_complex", "confocal", "a_surface", "explicit_expr"};
  return names[spec.index()];
}

inline const std::vector<std::string>& complex_coords() {
  static const std::vector<std::string> c{"x", "y", "z", "w"};
  return c;
}

/// Coordinate names of the field described by spec, in jet order.
inline std::vector<std::string> coordinates(const FamilySpec& spec) {
  struct Visitor {
    std::vector<std::string> operator()(const BatemanSpec&) const { return {"t", "x"}; }
    std::vector<std::string> operator()(const LinearSpec& s) const { return default_coords(s.f.size()); }
    std::vector<std::string> operator()(const QuadraticSpec& s) const { return default_coords(s.m.size()); }
    std::vector<std::string> operator()(const ChaundySpec&) const { return complex_coords(); }
    std::vector<std::string> operator()(const ExplicitComplexSpec&) const { return complex_coords(); }
    std::vector<std::string> operator()(const EllipsoidalSpec&) const { return {"x", "y", "z"}; }
    std::vector<std::string> operator()(const ASurfaceSpec& s) const {
      auto c = default_coords(s.n - 1);
      c.push_back("t");
      return c;
    }
    std::vector<std::string> operator()(const ExplicitExprSpec& s) const { return default_coords(s.n); }
  };
  return std::visit(Visitor{}, spec);
}

namespace detail {

inline void require_vars(const Expr& e, const std::set<std::string>& allowed, const std::string& what) {
  for (const auto& v : free_vars(e))
    if (!allowed.contains(v))
      throw Error(ErrorKind::arity_mismatch, what + " references unknown variable '" + v + "'");
}

inline std::set<std::string> with_phi(std::vector<std::string> names) {
  std::set<std::string> s(names.begin(), names.end());
  s.insert("phi");
  return s;
}

}  // namespace detail

/// Check every expression of spec against the variables its kind allows.
inline void validate(const FamilySpec& spec) {
  using detail::require_vars;
  const std::set<std::string> phi_only{"phi"};
  struct Visitor {
    const std::set<std::string>& phi_only;
    void operator()(const BatemanSpec& s) const {
      require_vars(s.f, phi_only, "F");
      require_vars(s.g, phi_only, "G");
    }
    void operator()(const LinearSpec& s) const {
      if (s.f.size() < 2) throw Error(ErrorKind::arity_mismatch, "linear family needs n >= 2");
      for (std::size_t i = 0; i < s.f.size(); ++i) require_vars(s.f[i], phi_only, "F" + std::to_string(i + 1));
    }
    void operator()(const QuadraticSpec& s) const {
      for (const auto& e : s.m.upper()) require_vars(e, phi_only, "M");
    }
    void operator()(const ChaundySpec& s) const {
      require_vars(s.f, {"x", "y", "phi"}, "F");
      require_vars(s.g, {"z", "w", "phi"}, "G");
      if (s.closed_form) require_vars(*s.closed_form, {"x", "y", "z", "w"}, "phi");
    }
    void operator()(const ExplicitComplexSpec& s) const {
      require_vars(s.outer, {"u", "v"}, "F");
      require_vars(s.f, {"x", "y"}, "f");
      require_vars(s.g, {"z", "w"}, "g");
    }
    void operator()(const EllipsoidalSpec& s) const {
      require_vars(s.a2, phi_only, "a2");
      require_vars(s.b2, phi_only, "b2");
      require_vars(s.c2, phi_only, "c2");
    }
    void operator()(const ASurfaceSpec& s) const {
      if (s.n < 2) throw Error(ErrorKind::arity_mismatch, "a_surface needs n >= 2");
      require_vars(s.a, detail::with_phi(default_coords(s.n - 1)), "A");
    }
    void operator()(const ExplicitExprSpec& s) const {
      auto c = default_coords(s.n);
      require_vars(s.e, std::set<std::string>(c.begin(), c.end()), "e");
    }
  };
  std::visit(Visitor{phi_only}, spec);
}

/// An explicitly known field phi = e(coords).
struct ExplicitField {
  Expr e;
  std::vector<std::string> coords;
};

using FieldSource = std::variant<ImplicitFamily, ExplicitField>;

inline BranchPolicy default_branch(const FamilySpec& spec) {
  if (const auto* e = std::get_if<EllipsoidalSpec>(&spec)) return Guess{e->level};
  return Bracket{-10.0, 10.0, 256};
}

/// The constraint (or explicit field) a family spec stands for.
inline FieldSource to_constraint(const FamilySpec& spec, std::optional<BranchPolicy> branch = {}) {
  validate(spec);
  const Expr phi = Expr::variable("phi");
  const BranchPolicy policy = branch ? *branch : default_branch(spec);
  const auto coords = coordinates(spec);
  auto var = [](const std::string& n) { return Expr::variable(n); };
  auto one = Expr::constant(1.0);

  struct Visitor {
    const std::vector<std::string>& coords;
    const BranchPolicy& policy;
    const Expr& one;
    decltype(var)& v;

    FieldSource operator()(const BatemanSpec& s) const {
      return make_family(v("t") * s.f + v("x") * s.g - one, coords, policy);
    }
    FieldSource operator()(const LinearSpec& s) const {
      Expr sum = s.f[0] * v(coords[0]);
      for (std::size_t i = 1; i < s.f.size(); ++i) sum = sum + s.f[i] * v(coords[i]);
      return make_family(sum - Expr::constant(s.c), coords, policy);
    }
    FieldSource operator()(const QuadraticSpec& s) const { return quadratic_family(s.m, policy); }
    FieldSource operator()(const ChaundySpec& s) const {
      if (s.closed_form) return ExplicitField{*s.closed_form, coords};
      return make_family(s.f - s.g, coords, policy);
    }
    FieldSource operator()(const ExplicitComplexSpec& s) const {
      return ExplicitField{substitute(s.outer, {{"u", s.f}, {"v", s.g}}), coords};
    }
    FieldSource operator()(const EllipsoidalSpec& s) const {
      const Expr sum = v("x") * v("x") / s.a2 + v("y") * v("y") / s.b2 + v("z") * v("z") / s.c2;
      return make_family(sum - one, coords, policy);
    }
    FieldSource operator()(const ASurfaceSpec& s) const { return make_family(v("t") - s.a, coords, policy); }
    FieldSource operator()(const ExplicitExprSpec& s) const { return ExplicitField{s.e, coords}; }
  };
  return std::visit(Visitor{coords, policy, one, var}, spec);
}

enum class CheckKind {
  bateman,
  ufe,
  sum_bateman,
  complex_bateman,
  first_order_system,
  example2,
  eliminant,
  general_eliminant,
  covariance,
  monge_ampere,
  bateman2d,
  equipotential,
  homogeneity,
};

inline constexpr CheckKind kAllChecks[] = {
    CheckKind::bateman,    CheckKind::ufe,          CheckKind::sum_bateman,   CheckKind::complex_bateman,
    CheckKind::first_order_system, CheckKind::example2, CheckKind::eliminant, CheckKind::general_eliminant,
    CheckKind::covariance, CheckKind::monge_ampere, CheckKind::bateman2d,     CheckKind::equipotential,
    CheckKind::homogeneity,
};

constexpr std::string_view to_string(CheckKind c) {
  switch (c) {
    case CheckKind::bateman: return "bateman";
    case CheckKind::ufe: return "ufe";
    case CheckKind::sum_bateman: return "sum_bateman";
    case CheckKind::complex_bateman: return "complex_bateman";
    case CheckKind::first_order_system: return "first_order_system";
    case CheckKind::example2: return "example2";
    case CheckKind::eliminant: return "eliminant";
    case CheckKind::general_eliminant: return "general_eliminant";
    case CheckKind::covariance: return "covariance";
    case CheckKind::monge_ampere: return "monge_ampere";
    case CheckKind::bateman2d: return "bateman2d";
    case CheckKind::equipotential: return "equipotential";
    case CheckKind::homogeneity: return "homogeneity";
  }
  return "?";
}

inline std::optional<CheckKind> parse_check(std::string_view name) {
  for (CheckKind c : kAllChecks)
    if (to_string(c) == name) return c;
  return std::nullopt;
}

/// Default tolerance of each check on normalized residuals.
constexpr double default_tolerance(CheckKind c) {
  switch (c) {
    case CheckKind::complex_bateman:
    case CheckKind::first_order_system: return 1e-10;
    case CheckKind::eliminant:
    case CheckKind::general_eliminant:
    case CheckKind::equipotential:
    case CheckKind::monge_ampere:
    case CheckKind::bateman2d: return 1e-8;
    case CheckKind::homogeneity: return 1e-12;
    default: return 1e-7;
  }
}

struct ExpectedCheck {
  CheckKind check;
  double tolerance;

  friend bool operator==(const ExpectedCheck&, const ExpectedCheck&) = default;
};

/// The equations each family kind is claimed to solve. phi_range is where the
/// quadratic kind's discriminant is probed.
inline std::vector<ExpectedCheck> expected_checks(const FamilySpec& spec,
                                                  std::pair<double, double> phi_range = {-1.0, 1.0},
                                                  std::uint64_t seed = 0) {
  auto check = [](CheckKind c, std::optional<double> tol = {}) {
    return ExpectedCheck{c, tol ? *tol : default_tolerance(c)};
  };
  struct Visitor {
    std::pair<double, double> phi_range;
    std::uint64_t seed;
    decltype(check)& c;
    std::vector<ExpectedCheck> operator()(const BatemanSpec&) const { return {c(CheckKind::bateman)}; }
    std::vector<ExpectedCheck> operator()(const LinearSpec&) const { return {c(CheckKind::ufe)}; }
    std::vector<ExpectedCheck> operator()(const QuadraticSpec& s) const {
      if (discriminant_vanishes(s.m, phi_range, seed)) return {c(CheckKind::ufe)};
      return {};
    }
    std::vector<ExpectedCheck> operator()(const ChaundySpec&) const {
      return {c(CheckKind::complex_bateman), c(CheckKind::first_order_system)};
    }
    std::vector<ExpectedCheck> operator()(const ExplicitComplexSpec&) const {
      return {c(CheckKind::complex_bateman), c(CheckKind::first_order_system)};
    }
    std::vector<ExpectedCheck> operator()(const EllipsoidalSpec&) const { return {c(CheckKind::equipotential)}; }
    std::vector<ExpectedCheck> operator()(const ASurfaceSpec& s) const {
      if (s.target == ASurfaceTarget::bateman2d) return {c(CheckKind::bateman2d), c(CheckKind::sum_bateman, 1e-6)};
      return {c(CheckKind::monge_ampere), c(CheckKind::ufe, 1e-6)};
    }
    std::vector<ExpectedCheck> operator()(const ExplicitExprSpec& s) const {
      if (s.degree == 0.0) return {c(CheckKind::homogeneity), c(CheckKind::ufe, 1e-9)};
      return {c(CheckKind::homogeneity)};
    }
  };
  return std::visit(Visitor{phi_range, seed, check}, spec);
}

// ---------------------------------------------------------------------------
// Equipotential check for ellipsoidal systems
// ---------------------------------------------------------------------------

struct EquipotentialResult {
  /// max |r - mean r| / |mean r| with r = laplacian(phi) / |grad phi|^2
  double spread = 0.0;
  std::vector<double> ratios;
  std::vector<std::vector<double>> points;
  int attempts = 0;
};

/// Sample points on the level set phi = level and measure how far
/// laplacian(phi)/|grad phi|^2 is from constant there. A system of
/// equipotentials V(phi) exists exactly when that ratio depends on phi only.
inline EquipotentialResult equipotential_check(const EllipsoidalSpec& spec, double level, int k, std::uint64_t seed) {
  const Bindings at_level{{"phi", level}};
  double a2 = 0.0, b2 = 0.0, c2 = 0.0;
  try {
    a2 = eval(spec.a2, at_level);
    b2 = eval(spec.b2, at_level);
    c2 = eval(spec.c2, at_level);
  } catch (const Error& e) {
    throw Error(ErrorKind::empty_level_set, e.what());
  }
  if (!(a2 > 0.0 && b2 > 0.0 && c2 > 0.0))
    throw Error(ErrorKind::empty_level_set, "semi-axes squared are not all positive at level " + format_number(level));

  const auto fam = std::get<ImplicitFamily>(to_constraint(spec, Guess{level}));
  Rng rng(seed);
  EquipotentialResult out;
  while (static_cast<int>(out.ratios.size()) < k && out.attempts < 10 * std::max(k, 1)) {
    ++out.attempts;
    const double rho = 0.95 * std::sqrt(rng.uniform());
    const double theta = 2.0 * std::numbers::pi * rng.uniform();
    const double x = std::sqrt(a2) * rho * std::cos(theta);
    const double y = std::sqrt(b2) * rho * std::sin(theta);
    const double z = std::sqrt(c2 * (1.0 - rho * rho));
    const std::vector<double> point{x, y, z};
    try {
      const double phi = solve_phi(fam, point, level);
      const FieldJet j = field_jet(fam, point, phi);
      double lap = 0.0, g2 = 0.0;
      for (std::size_t i = 0; i < 3; ++i) {
        lap += j.hess(i, i);
        g2 += j.grad[i] * j.grad[i];
      }
      out.ratios.push_back(lap / g2);
      out.points.push_back(point);
    } catch (const Error&) {
    }
  }
  if (out.ratios.empty()) throw Error(ErrorKind::empty_level_set, "no level-set point could be solved");
  double mean = 0.0;
  for (double r : out.ratios) mean += r;
  mean /= static_cast<double>(out.ratios.size());
  for (double r : out.ratios) out.spread = std::max(out.spread, std::abs(r - mean) / std::abs(mean));
  return out;
}

// ---------------------------------------------------------------------------
// Homogeneity
// ---------------------------------------------------------------------------

/// sum_i x_i d_i e - degree * e at a point, from a jet of e.
inline Residual euler_residual(const FieldJet& j, double degree) {
  TermSum sum;
  for (std::size_t i = 0; i < j.dim(); ++i) sum += j.x[i] * j.grad[i];
  sum -= degree * j.phi;
  return sum.result();
}

struct HomogeneityResult {
  ResidualReport euler;
  /// present when degree is 0 and the Euler relation holds
  std::optional<ResidualReport> ufe;

  bool homogeneous() const { return euler.pass(); }
  bool pass() const { return euler.pass() && (!ufe || ufe->pass()); }
};

/// Euler relation at k seeded points of box; degree-0 fields that pass are
/// also checked against the UFE at 1e-9.
inline HomogeneityResult homogeneity_check(const Expr& e, std::size_t n, double degree, int k, std::uint64_t seed,
                                           std::vector<std::pair<double, double>> box = {}) {
  if (box.empty()) box.assign(n, {0.5, 1.5});
  const auto coords = default_coords(n);
  SampleSpec spec;
  spec.box = box;
  spec.points = k;
  spec.seed = seed;
  spec.mode = SampleMode::random;
  HomogeneityResult out;
  out.euler = {"homogeneity", default_tolerance(CheckKind::homogeneity), {}};
  ResidualReport ufe{"ufe", 1e-9, {}};
  for (const auto& x : box_points(spec)) {
    const std::size_t index = out.euler.points.size();
    try {
      const FieldJet j = explicit_field_jet(e, coords, x);
      out.euler.add(index, x, j.phi, euler_residual(j, degree));
      ufe.add(index, x, j.phi, ufe_residual(j));
    } catch (const Error& err) {
      out.euler.add_error(index, x, err.what());
      ufe.add_error(index, x, err.what());
    }
  }
  if (degree == 0.0 && out.euler.pass()) out.ufe = std::move(ufe);
  return out;
}

// ---------------------------------------------------------------------------
// Random coefficient functions
// ---------------------------------------------------------------------------

/// c_0 + c_1 v + ... + c_d v^d with d drawn from [1, max_degree] and
/// coefficients uniform in [-1, 1].
inline Expr random_polynomial(Rng& rng, const std::string& var, int max_degree = 3) {
  const int degree = rng.integer(1, max_degree);
  const Expr v = Expr::variable(var);
  Expr sum = Expr::constant(rng.uniform(-1.0, 1.0));
  for (int k = 1; k <= degree; ++k) {
    const Expr c = Expr::constant(rng.uniform(-1.0, 1.0));
    sum = sum + (k == 1 ? c * v : c * Expr::power(v, Expr::constant(k)));
  }
  return sum;
}

/// Bateman pair (F, G) of random polynomials, redrawn until every point of a
/// 4x4 probe grid over box has a root inside the bracket with |C_phi| >= 1e-6.
inline BatemanSpec random_bateman_spec(Rng& rng, const std::vector<std::pair<double, double>>& box,
                                       const Bracket& bracket, int max_tries = 1000) {
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    BatemanSpec spec{random_polynomial(rng, "phi"), random_polynomial(rng, "phi")};
    auto fam = std::get<ImplicitFamily>(to_constraint(spec, bracket));
    fam.singular_threshold = 1e-6;
    SampleSpec probe;
    probe.box = box;
    probe.counts = {4, 4};
    bool ok = true;
    for (const auto& x : box_points(probe)) {
      try {
        solve_phi(fam, x);
      } catch (const Error&) {
        ok = false;
        break;
      }
    }
    if (ok) return spec;
  }
  throw Error(ErrorKind::no_root, "could not draw a solvable Bateman pair");
}

}  // namespace implicit_pde
