// SPDX-License-Identifier: MIT
#pragma once

#include <implicit_pde/errors.hpp>
#include <implicit_pde/eval.hpp>
#include <implicit_pde/expr.hpp>
#include <implicit_pde/jet.hpp>
#include <implicit_pde/linalg.hpp>
#include <implicit_pde/random.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace implicit_pde {

/// Take the first root of C(x, .) inside [lo, hi]: the interval is split into
/// `scan` equal pieces and the first sign-changing piece (in increasing phi)
/// whose refined root meets the tolerance wins.
struct Bracket {
  double lo = -10.0;
  double hi = 10.0;
  int scan = 64;
};

/// Damped Newton from a starting value. Grid samplers replace the starting
/// value with the previous solved point (continuation).
struct Guess {
  double value = 0.0;
};

using BranchPolicy = std::variant<Bracket, Guess>;

inline constexpr double kDefaultRootTolerance = 1e-12;
inline constexpr double kDefaultSingularThreshold = 1e-8;

/// Constraint C(x_1..x_n, phi) = 0 defining phi implicitly, with the branch
/// selection policy used to pick a root.
struct ImplicitFamily {
  Expr constraint;
  std::vector<std::string> coords;
  std::string field = "phi";
  BranchPolicy branch = Bracket{};
  double root_tol = kDefaultRootTolerance;
  double singular_threshold = kDefaultSingularThreshold;

  std::size_t dim() const { return coords.size(); }
};

/// Validating constructor: the constraint must mention the field variable and
/// nothing outside coords.
inline ImplicitFamily make_family(Expr constraint, std::vector<std::string> coords, BranchPolicy branch = Bracket{},
                                  std::string field = "phi") {
  const auto vars = free_vars(constraint);
  if (!vars.contains(field))
    throw Error(ErrorKind::arity_mismatch, "constraint does not depend on '" + field + "'");
  for (const auto& v : vars)
    if (v != field && std::find(coords.begin(), coords.end(), v) == coords.end())
      throw Error(ErrorKind::arity_mismatch, "constraint uses unknown variable '" + v + "'");
  ImplicitFamily fam;
  fam.constraint = std::move(constraint);
  fam.coords = std::move(coords);
  fam.field = std::move(field);
  fam.branch = branch;
  return fam;
}

/// phi together with all first and second derivatives at one point.
struct FieldJet {
  std::vector<double> x;
  double phi = 0.0;
  std::vector<double> grad;
  SymMatrix hess;

  std::size_t dim() const { return grad.size(); }
};

namespace detail {

inline Bindings coordinate_bindings(const ImplicitFamily& fam, std::span<const double> x) {
  if (x.size() != fam.dim())
    throw Error(ErrorKind::dimension_mismatch,
                "point has " + std::to_string(x.size()) + " coordinates, family has " + std::to_string(fam.dim()));
  Bindings b;
  for (std::size_t i = 0; i < x.size(); ++i) b.emplace(fam.coords[i], x[i]);
  return b;
}

/// Safeguarded Newton on a sign-changing bracket: Newton steps while they stay
/// inside the bracket and shrink fast enough, bisection otherwise.
template <class ValueAndSlope>
double refine_in_bracket(ValueAndSlope&& fd, double xl, double xh, double fl) {
  if (fl > 0.0) std::swap(xl, xh);  // keep f(xl) < 0 < f(xh)
  double x = 0.5 * (xl + xh);
  double dx_old = std::abs(xh - xl);
  double dx = dx_old;
  auto [f, df] = fd(x);
  for (int iter = 0; iter < 300 && f != 0.0; ++iter) {
    const bool newton_leaves = ((x - xh) * df - f) * ((x - xl) * df - f) > 0.0;
    const bool newton_slow = std::abs(2.0 * f) > std::abs(dx_old * df);
    if (newton_leaves || newton_slow || !std::isfinite(df) || df == 0.0) {
      dx_old = dx;
      dx = 0.5 * (xh - xl);
      x = xl + dx;
    } else {
      dx_old = dx;
      dx = f / df;
      x -= dx;
    }
    if (std::abs(dx) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(x), 1e-300)) break;
    std::tie(f, df) = fd(x);
    if (f < 0.0)
      xl = x;
    else
      xh = x;
  }
  return x;
}

/// First root of fd in [lo, hi] whose residual passes accept(x, f). Evaluation
/// failures inside the scan are skipped; candidates that fail acceptance (e.g.
/// a sign change across a pole) move the search to the next subinterval.
template <class ValueAndSlope, class Accept>
std::optional<double> first_root(ValueAndSlope&& fd, double lo, double hi, int scan, Accept&& accept) {
  auto value = [&](double x) -> std::optional<double> {
    try {
      return fd(x).first;
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  const int pieces = std::max(scan, 1);
  std::vector<double> xs(pieces + 1);
  for (int k = 0; k <= pieces; ++k) xs[k] = k == pieces ? hi : lo + (hi - lo) * k / pieces;
  std::vector<std::pair<double, double>> candidates;
  std::optional<double> prev = value(xs[0]);
  for (int k = 1; k <= pieces; ++k) {
    const std::optional<double> cur = value(xs[k]);
    if (prev && cur && *prev * *cur <= 0.0) candidates.emplace_back(xs[k - 1], xs[k]);
    prev = cur;
  }
  for (auto [a, b] : candidates) {
    const double fa = *value(a);
    const double fb = *value(b);
    double root;
    try {
      if (fa == 0.0)
        root = a;
      else if (fb == 0.0)
        root = b;
      else
        root = refine_in_bracket(fd, a, b, fa);
      if (accept(root, fd(root).first)) return root;
    } catch (const Error&) {
    }
  }
  return std::nullopt;
}

/// Damped Newton from a starting point; stops at the noise floor.
template <class ValueAndSlope>
double damped_newton(ValueAndSlope&& fd, double x) {
  auto [f, df] = fd(x);
  for (int iter = 0; iter < 100 && f != 0.0; ++iter) {
    if (df == 0.0 || !std::isfinite(df)) throw Error(ErrorKind::no_root, "Newton iteration hit a zero slope");
    const double step = f / df;
    double alpha = 1.0;
    bool improved = false;
    double xn = x, fn = f, dfn = df;
    while (alpha >= 1.0 / 4096.0) {
      xn = x - alpha * step;
      try {
        std::tie(fn, dfn) = fd(xn);
        if (std::abs(fn) < std::abs(f)) {
          improved = true;
          break;
        }
      } catch (const Error&) {
      }
      alpha *= 0.5;
    }
    if (!improved) break;
    const double moved = std::abs(xn - x);
    x = xn;
    f = fn;
    df = dfn;
    if (moved <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(x), 1e-300)) break;
  }
  return x;
}

}  // namespace detail

/// C and dC/dphi at (x, phi).
inline std::pair<double, double> constraint_and_slope(const ImplicitFamily& fam, std::span<const double> x,
                                                      double phi) {
  const Bindings fixed = detail::coordinate_bindings(fam, x);
  const double point[1] = {phi};
  const std::string order[1] = {fam.field};
  const Jet2 j = jet_eval(fam.constraint, point, order, fixed);
  return {j.value(), j.grad(0)};
}

/// Solve C(x, phi) = 0 for phi on the branch chosen by the family's policy.
/// guess, when given, overrides the policy with continuation from that value.
inline double solve_phi(const ImplicitFamily& fam, std::span<const double> x, std::optional<double> guess = {}) {
  auto fd = [&](double phi) { return constraint_and_slope(fam, x, phi); };
  auto accept = [&](double, double f) { return std::abs(f) <= fam.root_tol; };

  double phi;
  if (guess || std::holds_alternative<Guess>(fam.branch)) {
    const double start = guess ? *guess : std::get<Guess>(fam.branch).value;
    try {
      phi = detail::damped_newton(fd, start);
    } catch (const Error& e) {
      throw Error(ErrorKind::no_root, std::string("continuation failed: ") + e.what());
    }
    if (!accept(phi, fd(phi).first))
      throw Error(ErrorKind::no_root, "Newton iteration from " + format_number(start) + " did not converge");
  } else {
    const auto& b = std::get<Bracket>(fam.branch);
    const auto root = detail::first_root(fd, b.lo, b.hi, b.scan, accept);
    if (!root)
      throw Error(ErrorKind::no_root,
                  "no sign change of the constraint in [" + format_number(b.lo) + ", " + format_number(b.hi) + "]");
    phi = *root;
  }
  const double slope = fd(phi).second;
  if (!(std::abs(slope) > fam.singular_threshold))
    throw Error(ErrorKind::singular_point, "|dC/dphi| = " + format_number(std::abs(slope)) + " at phi = " +
                                               format_number(phi));
  return phi;
}

/// All first and second derivatives of the implicit phi at (x, phi) by
/// implicit differentiation of C(x, phi(x)) = 0.
inline FieldJet field_jet(const ImplicitFamily& fam, std::span<const double> x, double phi) {
  const std::size_t n = fam.dim();
  if (x.size() != n)
    throw Error(ErrorKind::dimension_mismatch,
                "point has " + std::to_string(x.size()) + " coordinates, family has " + std::to_string(n));
  std::vector<double> point(x.begin(), x.end());
  point.push_back(phi);
  std::vector<std::string> order = fam.coords;
  order.push_back(fam.field);
  const Jet2 c = jet_eval(fam.constraint, point, order);

  const double c_phi = c.grad(n);
  if (!(std::abs(c_phi) > fam.singular_threshold))
    throw Error(ErrorKind::singular_point, "|dC/dphi| = " + format_number(std::abs(c_phi)));

  FieldJet j;
  j.x.assign(x.begin(), x.end());
  j.phi = phi;
  j.grad.resize(n);
  j.hess = SymMatrix(n);
  for (std::size_t p = 0; p < n; ++p) j.grad[p] = -c.grad(p) / c_phi;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p; q < n; ++q)
      j.hess(p, q) = -(c.hess(p, q) + c.hess(p, n) * j.grad[q] + c.hess(q, n) * j.grad[p] +
                       c.hess(n, n) * j.grad[p] * j.grad[q]) /
                     c_phi;
  return j;
}

/// FieldJet of an explicitly given field phi = e(coords).
inline FieldJet explicit_field_jet(const Expr& e, std::span<const std::string> coords, std::span<const double> x) {
  const Jet2 v = jet_eval(e, x, coords);
  FieldJet j;
  j.x.assign(x.begin(), x.end());
  j.phi = v.value();
  j.grad = v.grad();
  j.hess = v.hess();
  return j;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

enum class SampleMode {
  grid,    ///< tensor grid, counts per axis, endpoints included
  random,  ///< `points` uniform draws from the box
  ray,     ///< draw y in box and phi0, scale y along its ray onto C(., phi0) = 0
  axis,    ///< draw y in box and phi0, move the last coordinate onto C(., phi0) = 0
};

struct SampleSpec {
  std::vector<std::pair<double, double>> box;
  std::vector<int> counts;
  int points = 0;
  std::uint64_t seed = 0;
  SampleMode mode = SampleMode::grid;
  std::pair<double, double> phi_range{0.0, 1.0};
  std::pair<double, double> axis_range{-100.0, 100.0};
};

struct SamplePoint {
  std::size_t index = 0;
  std::vector<double> x;
  std::optional<FieldJet> jet;
  std::optional<ErrorKind> error;
  std::string message;

  bool ok() const { return jet.has_value(); }
};

/// Points of a grid or random sample, in deterministic index order.
inline std::vector<std::vector<double>> box_points(const SampleSpec& spec) {
  const std::size_t n = spec.box.size();
  std::vector<std::vector<double>> pts;
  if (spec.mode == SampleMode::grid) {
    if (spec.counts.size() != n)
      throw Error(ErrorKind::dimension_mismatch, "grid counts must match the box dimension");
    std::size_t total = 1;
    for (int c : spec.counts) {
      if (c < 1) throw Error(ErrorKind::dimension_mismatch, "grid counts must be positive");
      total *= static_cast<std::size_t>(c);
    }
    for (std::size_t k = 0; k < total; ++k) {
      std::vector<double> x(n);
      std::size_t rem = k;
      for (std::size_t axis = n; axis-- > 0;) {
        const auto c = static_cast<std::size_t>(spec.counts[axis]);
        const std::size_t i = rem % c;
        rem /= c;
        const auto [lo, hi] = spec.box[axis];
        x[axis] = c == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(c - 1);
      }
      pts.push_back(std::move(x));
    }
    return pts;
  }
  Rng rng(spec.seed);
  for (int k = 0; k < spec.points; ++k) {
    std::vector<double> x(n);
    for (std::size_t axis = 0; axis < n; ++axis) x[axis] = rng.uniform(spec.box[axis].first, spec.box[axis].second);
    pts.push_back(std::move(x));
  }
  return pts;
}

/// Solve and differentiate at every point of a grid or random sample. Failed
/// points keep their error record. Families with a Guess policy continue from
/// the previous successful point.
inline std::vector<SamplePoint> sample_grid(const ImplicitFamily& fam, const SampleSpec& spec) {
  if (spec.box.size() != fam.dim())
    throw Error(ErrorKind::dimension_mismatch, "sample box dimension differs from family dimension");
  if (spec.mode == SampleMode::ray || spec.mode == SampleMode::axis)
    throw Error(ErrorKind::config, "sample_grid needs grid or random mode; use sample_manifold");
  std::vector<SamplePoint> out;
  std::optional<double> continuation;
  const bool continues = std::holds_alternative<Guess>(fam.branch);
  const auto pts = box_points(spec);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    SamplePoint sp;
    sp.index = k;
    sp.x = pts[k];
    try {
      const double phi = solve_phi(fam, sp.x, continues ? continuation : std::nullopt);
      sp.jet = field_jet(fam, sp.x, phi);
      continuation = phi;
    } catch (const Error& e) {
      sp.error = e.kind();
      sp.message = e.what();
    }
    out.push_back(std::move(sp));
  }
  return out;
}

/// Sample points lying on level sets with phi0 drawn uniformly from
/// spec.phi_range: each draw y from the box is moved onto C(., phi0) = 0
/// (along its ray from the origin, or along the last axis), then phi is
/// re-solved from phi0 and differentiated.
inline std::vector<SamplePoint> sample_manifold(const ImplicitFamily& fam, const SampleSpec& spec) {
  const std::size_t n = fam.dim();
  if (spec.box.size() != n) throw Error(ErrorKind::dimension_mismatch, "sample box dimension differs from family");
  if (spec.mode != SampleMode::ray && spec.mode != SampleMode::axis)
    throw Error(ErrorKind::config, "sample_manifold needs ray or axis mode");
  Rng rng(spec.seed);
  std::vector<SamplePoint> out;
  std::vector<std::string> order = fam.coords;
  for (int k = 0; k < spec.points; ++k) {
    SamplePoint sp;
    sp.index = static_cast<std::size_t>(k);
    std::vector<double> y(n);
    for (std::size_t axis = 0; axis < n; ++axis) y[axis] = rng.uniform(spec.box[axis].first, spec.box[axis].second);
    const double phi0 = rng.uniform(spec.phi_range.first, spec.phi_range.second);
    Bindings fixed{{fam.field, phi0}};

    // value and slope of C along the chosen one-parameter path through y
    auto along = [&](double s) {
      std::vector<double> x = y;
      if (spec.mode == SampleMode::ray)
        for (double& v : x) v *= std::exp(s);
      else
        x[n - 1] = s;
      const Jet2 c = jet_eval(fam.constraint, x, order, fixed);
      double slope = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        slope += c.grad(i) * (spec.mode == SampleMode::ray ? x[i] : (i == n - 1 ? 1.0 : 0.0));
      return std::pair{c.value(), slope};
    };
    const double lo = spec.mode == SampleMode::ray ? std::log(1e-3) : spec.axis_range.first;
    const double hi = spec.mode == SampleMode::ray ? std::log(1e3) : spec.axis_range.second;
    const auto s = detail::first_root(along, lo, hi, 256, [&](double, double f) { return std::abs(f) <= 1e-13; });
    sp.x = y;
    if (!s) {
      sp.error = ErrorKind::no_root;
      sp.message = "NoRoot: path through the sample point does not meet the level set";
      out.push_back(std::move(sp));
      continue;
    }
    if (spec.mode == SampleMode::ray)
      for (double& v : sp.x) v *= std::exp(*s);
    else
      sp.x[n - 1] = *s;
    try {
      const double phi = solve_phi(fam, sp.x, phi0);
      sp.jet = field_jet(fam, sp.x, phi);
    } catch (const Error& e) {
      sp.error = e.kind();
      sp.message = e.what();
    }
    out.push_back(std::move(sp));
  }
  return out;
}

/// Dispatch on spec.mode.
inline std::vector<SamplePoint> sample(const ImplicitFamily& fam, const SampleSpec& spec) {
  if (spec.mode == SampleMode::ray || spec.mode == SampleMode::axis) return sample_manifold(fam, spec);
  return sample_grid(fam, spec);
}

}  // namespace implicit_pde
