// SPDX-License-Identifier: MIT
#pragma once

#include <implicit_pde/errors.hpp>
#include <implicit_pde/families.hpp>
#include <implicit_pde/quad_ansatz.hpp>
#include <implicit_pde/residuals.hpp>
#include <implicit_pde/scenario.hpp>
#include <implicit_pde/version.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace implicit_pde {

/// Largest share of sample points that may fail to solve before a family is
/// reported as SolverCoverage.
inline constexpr double kMaxFailedShare = 0.10;

struct CheckResult {
  ResidualReport report;

  bool pass() const { return report.pass(); }
};

struct FamilyResult {
  std::size_t index = 0;
  std::string name;
  std::string kind;
  std::vector<SamplePoint> points;
  std::vector<CheckResult> checks;

  std::size_t failed_points() const {
    return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const auto& p) { return !p.ok(); }));
  }
  bool coverage_ok() const {
    return static_cast<double>(failed_points()) <= kMaxFailedShare * static_cast<double>(points.size());
  }
  bool pass() const {
    return coverage_ok() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass(); });
  }
};

struct Report {
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<ScenarioSection> sections;
  std::vector<FamilyResult> families;

  bool pass() const {
    return std::all_of(families.begin(), families.end(), [](const auto& f) { return f.pass(); });
  }
};

namespace harness_detail {

inline std::vector<std::string> x_coords(const ASurfaceSpec& s) { return default_coords(s.n - 1); }

/// Why check cannot run on spec, or empty when it can.
inline std::string inapplicable(CheckKind check, const FamilySpec& spec) {
  const std::size_t n = coordinates(spec).size();
  auto need_n = [&](std::size_t want) {
    return n == want ? std::string() : "needs " + std::to_string(want) + " coordinates, family has " + std::to_string(n);
  };
  switch (check) {
    case CheckKind::bateman:
    case CheckKind::example2: return need_n(2);
    case CheckKind::sum_bateman: return need_n(3);
    case CheckKind::complex_bateman:
    case CheckKind::first_order_system: return need_n(4);
    case CheckKind::ufe:
    case CheckKind::covariance: return n >= 2 ? std::string() : "needs at least 2 coordinates";
    case CheckKind::eliminant:
    case CheckKind::general_eliminant:
      return std::holds_alternative<QuadraticSpec>(spec) ? std::string() : "applies to quadratic families only";
    case CheckKind::monge_ampere:
      return std::holds_alternative<ASurfaceSpec>(spec) ? std::string() : "applies to a_surface families only";
    case CheckKind::bateman2d:
      if (!std::holds_alternative<ASurfaceSpec>(spec)) return "applies to a_surface families only";
      return need_n(3);
    case CheckKind::equipotential:
      return std::holds_alternative<EllipsoidalSpec>(spec) ? std::string() : "applies to confocal families only";
    case CheckKind::homogeneity:
      return std::holds_alternative<ExplicitExprSpec>(spec) ? std::string() : "applies to explicit_expr families only";
  }
  return "unknown check";
}

inline Residual worst(std::initializer_list<Residual> rs) {
  Residual w{0.0, 0.0};
  for (const auto& r : rs)
    if (std::abs(r.normalized()) >= std::abs(w.normalized())) w = r;
  return w;
}

/// Residual of check at one solved point of the family.
inline Residual point_residual(CheckKind check, const FamilyConfig& fc, const FieldJet& j) {
  switch (check) {
    case CheckKind::bateman: return bateman_residual(j);
    case CheckKind::ufe: return ufe_residual(j);
    case CheckKind::sum_bateman: return sum_bateman_residual(j);
    case CheckKind::complex_bateman: return complex_bateman_residual(j);
    case CheckKind::example2: return example2_residual(j);
    case CheckKind::covariance: {
      const FieldJet e = compose_exp(j);
      return j.dim() == 2 ? bateman_residual(e) : ufe_residual(e);
    }
    case CheckKind::first_order_system: {
      const auto* c = std::get_if<ChaundySpec>(&fc.spec);
      const FirstOrderResiduals r = c && !c->closed_form
                                        ? first_order_system_residual(c->f, c->g, j, fc.singular_threshold)
                                        : first_order_system_residual(j, fc.singular_threshold);
      return worst({r.residuals[0], r.residuals[1], r.residuals[2], r.residuals[3]});
    }
    case CheckKind::eliminant:
    case CheckKind::general_eliminant: {
      const auto& m = std::get<QuadraticSpec>(fc.spec).m;
      const AnsatzState s = build_state(m, j);
      const std::size_t n = j.dim();
      Residual w{0.0, 0.0};
      auto keep = [&](Residual r) {
        if (std::abs(r.normalized()) >= std::abs(w.normalized())) w = r;
      };
      if (check == CheckKind::eliminant) {
        for (std::size_t p = 0; p < n; ++p)
          for (std::size_t q = p + 1; q < n; ++q) keep(eliminant_residual(s, j, p, q));
      } else {
        for (std::size_t p = 0; p < n; ++p)
          for (std::size_t q = 0; q < n; ++q)
            for (std::size_t r = 0; r < n; ++r)
              for (std::size_t t = 0; t < n; ++t) keep(general_eliminant_residual(s, j, p, q, r, t));
      }
      return w;
    }
    case CheckKind::monge_ampere:
    case CheckKind::bateman2d: {
      const auto& a = std::get<ASurfaceSpec>(fc.spec);
      const auto xs = x_coords(a);
      const auto r = a_surface_residuals(a.a, xs, std::span<const double>(j.x).first(xs.size()), j.phi);
      return check == CheckKind::monge_ampere ? r.monge_ampere : r.bateman2d;
    }
    case CheckKind::homogeneity: return euler_residual(j, std::get<ExplicitExprSpec>(fc.spec).degree);
    case CheckKind::equipotential: break;
  }
  throw Error(ErrorKind::config, "check has no per-point residual");
}

inline ImplicitFamily implicit_of(const FamilyConfig& fc, const ImplicitFamily& base) {
  ImplicitFamily fam = base;
  fam.root_tol = fc.root_tol;
  fam.singular_threshold = fc.singular_threshold;
  return fam;
}

}  // namespace harness_detail

/// Solved sample points (with field jets) of one configured family.
inline std::vector<SamplePoint> sample_family(const FamilyConfig& fc) {
  const FieldSource source = to_constraint(fc.spec, fc.branch);
  if (const auto* ex = std::get_if<ExplicitField>(&source)) {
    std::vector<SamplePoint> out;
    const auto pts = box_points(fc.sample);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      SamplePoint sp;
      sp.index = k;
      sp.x = pts[k];
      try {
        sp.jet = explicit_field_jet(ex->e, ex->coords, sp.x);
      } catch (const Error& e) {
        sp.error = e.kind();
        sp.message = e.what();
      }
      out.push_back(std::move(sp));
    }
    return out;
  }
  const ImplicitFamily fam = harness_detail::implicit_of(fc, std::get<ImplicitFamily>(source));
  if (const auto* e = std::get_if<EllipsoidalSpec>(&fc.spec)) {
    // points on the level set phi = level
    const auto eq = equipotential_check(*e, fc.level, fc.sample.points, fc.sample.seed);
    std::vector<SamplePoint> out;
    for (std::size_t k = 0; k < eq.points.size(); ++k) {
      SamplePoint sp;
      sp.index = k;
      sp.x = eq.points[k];
      try {
        sp.jet = field_jet(fam, sp.x, solve_phi(fam, sp.x, fc.level));
      } catch (const Error& err) {
        sp.error = err.kind();
        sp.message = err.what();
      }
      out.push_back(std::move(sp));
    }
    return out;
  }
  return sample(fam, fc.sample);
}

/// The checks and tolerances a family is run against.
inline std::vector<ExpectedCheck> selected_checks(const ScenarioConfig& cfg, const FamilyConfig& fc) {
  std::vector<ExpectedCheck> list;
  if (cfg.checks.run.empty())
    list = expected_checks(fc.spec, fc.sample.phi_range, fc.sample.seed);
  else
    for (CheckKind c : cfg.checks.run) list.push_back({c, default_tolerance(c)});
  for (auto& c : list) {
    if (cfg.checks.residual_tol) c.tolerance = *cfg.checks.residual_tol;
    if (auto it = cfg.checks.tolerance.find(c.check); it != cfg.checks.tolerance.end()) c.tolerance = it->second;
  }
  return list;
}

/// Run every selected check of every family. Inapplicable checks raise
/// ConfigError; per-point failures are recorded in the report.
inline Report run_checks(const ScenarioConfig& cfg) {
  Report report;
  report.scenario = cfg.name;
  report.seed = cfg.seed;
  report.sections = cfg.sections;
  for (std::size_t index = 0; index < cfg.families.size(); ++index) {
    const FamilyConfig& fc = cfg.families[index];
    const auto checks = selected_checks(cfg, fc);
    for (const auto& c : checks)
      if (auto why = harness_detail::inapplicable(c.check, fc.spec); !why.empty())
        throw ConfigError(fc.line, std::string(to_string(c.check)), why);

    FamilyResult fr;
    fr.index = index;
    fr.name = fc.name;
    fr.kind = kind_name(fc.spec);
    try {
      fr.points = sample_family(fc);
    } catch (const Error& e) {
      // the whole family failed to produce points (e.g. an empty level set)
      SamplePoint sp;
      sp.error = e.kind();
      sp.message = e.what();
      fr.points.push_back(std::move(sp));
    }

    for (const auto& c : checks) {
      CheckResult cr;
      cr.report = {std::string(to_string(c.check)), c.tolerance, {}};
      if (c.check == CheckKind::equipotential) {
        const auto& spec = std::get<EllipsoidalSpec>(fc.spec);
        try {
          const auto eq = equipotential_check(spec, fc.level, fc.sample.points, fc.sample.seed);
          double mean = 0.0;
          for (double r : eq.ratios) mean += r;
          mean /= static_cast<double>(eq.ratios.size());
          for (std::size_t k = 0; k < eq.ratios.size(); ++k)
            cr.report.add(k, eq.points[k], fc.level, Residual{eq.ratios[k] - mean, std::abs(mean)});
        } catch (const Error& e) {
          cr.report.add_error(0, {}, e.what());
        }
      } else {
        for (const auto& p : fr.points) {
          if (!p.ok()) {
            cr.report.add_error(p.index, p.x, p.message);
            continue;
          }
          try {
            cr.report.add(p.index, p.x, p.jet->phi, harness_detail::point_residual(c.check, fc, *p.jet));
          } catch (const Error& e) {
            cr.report.add_error(p.index, p.x, e.what());
          }
        }
      }
      fr.checks.push_back(std::move(cr));
    }
    report.families.push_back(std::move(fr));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Determinant identity fuzzing
// ---------------------------------------------------------------------------

inline constexpr double kIdentityTolerance = 1e-9;

struct FuzzEntry {
  std::size_t n = 0;
  int trials = 0;
  double worst = 0.0;  ///< max |ratio - 1|
  std::set<int> signs;

  bool pass() const { return worst <= kIdentityTolerance; }
};

struct FuzzReport {
  std::uint64_t seed = 0;
  int trials = 0;
  std::vector<FuzzEntry> entries;

  bool pass() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass(); });
  }
};

/// Random jet with |phi_i| in [0.5, 1.5] (random sign) and Hessian entries in
/// [-1, 1].
inline FieldJet random_jet(Rng& rng, std::size_t n) {
  FieldJet j;
  j.x.assign(n, 0.0);
  j.grad.resize(n);
  for (double& g : j.grad) g = (rng.coin() ? 1.0 : -1.0) * rng.uniform(0.5, 1.5);
  j.hess = SymMatrix(n);
  for (double& h : j.hess.packed()) h = rng.uniform(-1.0, 1.0);
  return j;
}

inline FuzzReport fuzz_identity(const std::vector<std::size_t>& n_list, int trials, std::uint64_t seed) {
  FuzzReport out;
  out.seed = seed;
  out.trials = trials;
  for (std::size_t n : n_list) {
    if (n < 2 || n > 6) throw ConfigError(std::nullopt, "n", "dimension " + std::to_string(n) + " outside 2..6");
    FuzzEntry e;
    e.n = n;
    e.trials = trials;
    Rng rng(derive_seed(seed, n));
    for (int t = 0; t < trials; ++t) {
      const DetIdentity d = det_identity_check(random_jet(rng, n));
      e.worst = std::max(e.worst, std::isfinite(d.ratio) ? std::abs(d.ratio - 1.0) : INFINITY);
      e.signs.insert(d.sign);
    }
    out.entries.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace harness_detail {

using json = nlohmann::ordered_json;

inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json vec(const std::vector<double>& v) {
  json a = json::array();
  for (double d : v) a.push_back(number(d));
  return a;
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + format_number(v[i]);
  return s;
}

inline std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace harness_detail

inline nlohmann::ordered_json to_json(const Report& r) {
  using harness_detail::json;
  using harness_detail::number;
  using harness_detail::vec;
  json out;
  out["tool"] = "implicit-pde";
  out["version"] = std::string(kVersion);
  out["scenario"] = r.scenario;
  out["seed"] = r.seed;
  json echo = json::array();
  for (const auto& s : r.sections) {
    json entries = json::object();
    for (const auto& e : s.entries) entries[e.key] = e.value;
    echo.push_back({{"section", s.name}, {"entries", entries}});
  }
  out["config"] = echo;
  json families = json::array();
  for (const auto& f : r.families) {
    json fam;
    fam["index"] = f.index;
    fam["name"] = f.name;
    fam["kind"] = f.kind;
    fam["points"] = f.points.size();
    fam["failed_points"] = f.failed_points();
    fam["coverage_ok"] = f.coverage_ok();
    if (!f.coverage_ok()) fam["error"] = std::string(to_string(ErrorKind::solver_coverage));
    json failures = json::array();
    for (const auto& p : f.points)
      if (!p.ok())
        failures.push_back({{"index", p.index},
                            {"x", vec(p.x)},
                            {"error", p.error ? std::string(to_string(*p.error)) : std::string()},
                            {"message", p.message}});
    fam["sample_failures"] = failures;
    json checks = json::array();
    for (const auto& c : f.checks) {
      const auto& rep = c.report;
      json ch;
      ch["check"] = rep.check;
      ch["tolerance"] = rep.tolerance;
      ch["evaluated"] = rep.evaluated();
      ch["errors"] = rep.errors();
      ch["max_normalized"] = number(rep.max_normalized());
      ch["mean_normalized"] = number(rep.mean_normalized());
      ch["pass"] = c.pass();
      json bad = json::array();
      for (const auto& p : rep.points)
        if (p.status == PointStatus::fail)
          bad.push_back({{"index", p.index},
                         {"x", vec(p.x)},
                         {"phi", number(p.phi)},
                         {"raw", number(p.residual.raw)},
                         {"scale", number(p.residual.scale)},
                         {"normalized", number(p.residual.normalized())}});
      ch["failures"] = bad;
      checks.push_back(ch);
    }
    fam["checks"] = checks;
    fam["pass"] = f.pass();
    families.push_back(fam);
  }
  out["families"] = families;
  out["pass"] = r.pass();
  return out;
}

/// Per-point residual rows: family,index,coords,phi,check,raw,scale,normalized,status.
inline std::string to_csv(const Report& r) {
  using harness_detail::csv_field;
  using harness_detail::join;
  std::ostringstream out;
  out << "family,index,coords,phi,check,raw,scale,normalized,status\n";
  for (const auto& f : r.families)
    for (const auto& c : f.checks)
      for (const auto& p : c.report.points) {
        out << csv_field(f.name) << ',' << p.index << ',' << join(p.x) << ',';
        if (p.status == PointStatus::error) {
          out << ',' << c.report.check << ",,,," << to_string(p.status) << '\n';
          continue;
        }
        out << format_number(p.phi) << ',' << c.report.check << ',' << format_number(p.residual.raw) << ','
            << format_number(p.residual.scale) << ',' << format_number(p.residual.normalized()) << ','
            << to_string(p.status) << '\n';
      }
  return out.str();
}

/// Solved points with their jets: family,index,coords,phi,grad,hess,status,error.
/// hess lists the upper triangle row by row.
inline std::string samples_to_csv(const ScenarioConfig& cfg) {
  using harness_detail::csv_field;
  using harness_detail::join;
  std::ostringstream out;
  out << "family,index,coords,phi,grad,hess,status,error\n";
  for (const auto& fc : cfg.families)
    for (const auto& p : sample_family(fc)) {
      out << csv_field(fc.name) << ',' << p.index << ',' << join(p.x) << ',';
      if (p.ok())
        out << format_number(p.jet->phi) << ',' << join(p.jet->grad) << ',' << join(p.jet->hess.packed())
            << ",ok,\n";
      else
        out << ",,,error," << (p.error ? to_string(*p.error) : std::string_view()) << '\n';
    }
  return out.str();
}

inline nlohmann::ordered_json to_json(const FuzzReport& r) {
  using harness_detail::json;
  json out;
  out["tool"] = "implicit-pde";
  out["version"] = std::string(kVersion);
  out["seed"] = r.seed;
  out["trials"] = r.trials;
  out["tolerance"] = kIdentityTolerance;
  json entries = json::array();
  for (const auto& e : r.entries) {
    json signs = json::array();
    for (int s : e.signs) signs.push_back(s);
    entries.push_back({{"n", e.n},
                       {"trials", e.trials},
                       {"worst_ratio_deviation", harness_detail::number(e.worst)},
                       {"signs", signs},
                       {"sign_constant", e.signs.size() <= 1},
                       {"pass", e.pass()}});
  }
  out["dimensions"] = entries;
  out["pass"] = r.pass();
  return out;
}

}  // namespace implicit_pde
