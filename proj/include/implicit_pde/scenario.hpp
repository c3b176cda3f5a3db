// SPDX-License-Identifier: MIT
#pragma once

#include <implicit_pde/errors.hpp>
#include <implicit_pde/families.hpp>
#include <implicit_pde/implicit_field.hpp>
#include <implicit_pde/parse.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace implicit_pde {

// Scenario files are line oriented:
//
//   # comment
//   [family] kind=bateman F=phi G=phi^2
//   [sample]
//   box = 1,2;1,2
//   points = 50
//
// A line is either `key = value` (spaces around '=', value runs to the end of
// the line) or a run of compact `key=value` tokens; compact values containing
// spaces must be double-quoted. Section headers may carry compact tokens.

struct ScenarioEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct ScenarioSection {
  std::string name;
  std::size_t line = 0;
  std::vector<ScenarioEntry> entries;

  const ScenarioEntry* find(std::string_view key) const {
    for (const auto& e : entries)
      if (e.key == key) return &e;
    return nullptr;
  }
};

struct FamilyConfig {
  std::string name;
  FamilySpec spec;
  std::size_t line = 0;
  SampleSpec sample;
  BranchPolicy branch = Bracket{-10.0, 10.0, 256};
  double root_tol = kDefaultRootTolerance;
  double singular_threshold = kDefaultSingularThreshold;
  /// confocal kind: level of the equipotential check
  double level = 1.0;
};

struct CheckSelection {
  /// empty: each family's expected checks
  std::vector<CheckKind> run;
  std::optional<double> residual_tol;
  std::map<CheckKind, double> tolerance;
};

struct ScenarioConfig {
  std::string name;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::vector<FamilyConfig> families;
  CheckSelection checks;
  std::string json_path;
  std::string csv_path;
  /// normalized sections, echoed into reports
  std::vector<ScenarioSection> sections;
};

namespace scenario_detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  return true;
}

inline std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

inline std::string unquote(std::string_view v, std::size_t line, std::string_view key) {
  v = trim(v);
  if (!v.empty() && v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') throw ConfigError(line, std::string(key), "unterminated quote");
    return std::string(v.substr(1, v.size() - 2));
  }
  return std::string(v);
}

/// key=value tokens separated by whitespace; values may be double-quoted.
inline void parse_compact(std::string_view text, std::size_t line, std::vector<ScenarioEntry>& out) {
  std::size_t i = 0;
  while (true) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\r')) ++i;
    if (i >= text.size()) return;
    const std::size_t start = i;
    bool quoted = false;
    while (i < text.size() && (quoted || !(text[i] == ' ' || text[i] == '\t' || text[i] == '\r'))) {
      if (text[i] == '"') quoted = !quoted;
      ++i;
    }
    const std::string_view token = text.substr(start, i - start);
    if (quoted) throw ConfigError(line, "", "unterminated quote in '" + std::string(token) + "'");
    const auto eq = token.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw ConfigError(line, "", "expected key=value, got '" + std::string(token) + "'");
    const std::string_view key = token.substr(0, eq);
    if (!is_identifier(key)) throw ConfigError(line, std::string(key), "invalid key");
    out.push_back({std::string(key), unquote(token.substr(eq + 1), line, key), line});
  }
}

inline std::vector<ScenarioSection> parse_sections(std::istream& in) {
  std::vector<ScenarioSection> sections;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      const auto close = line.find(']');
      if (close == std::string_view::npos) throw ConfigError(line_no, "", "unterminated section header");
      const std::string_view name = trim(line.substr(1, close - 1));
      if (!is_identifier(name)) throw ConfigError(line_no, "", "invalid section name '" + std::string(name) + "'");
      sections.push_back({std::string(name), line_no, {}});
      parse_compact(line.substr(close + 1), line_no, sections.back().entries);
      continue;
    }
    if (sections.empty()) throw ConfigError(line_no, "", "entry outside of any section");
    auto& entries = sections.back().entries;
    const auto eq = line.find('=');
    const bool spaced = eq != std::string_view::npos && eq > 0 &&
                        (line[eq - 1] == ' ' || line[eq - 1] == '\t' ||
                         (eq + 1 < line.size() && (line[eq + 1] == ' ' || line[eq + 1] == '\t')));
    if (spaced) {
      const std::string_view key = trim(line.substr(0, eq));
      if (!is_identifier(key)) throw ConfigError(line_no, std::string(key), "invalid key");
      entries.push_back({std::string(key), unquote(line.substr(eq + 1), line_no, key), line_no});
    } else {
      parse_compact(line, line_no, entries);
    }
  }
  for (const auto& s : sections) {
    std::set<std::string> seen;
    for (const auto& e : s.entries)
      if (!seen.insert(e.key).second) throw ConfigError(e.line, e.key, "duplicate key in [" + s.name + "]");
  }
  return sections;
}

inline double to_double(const ScenarioEntry& e, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty() || !std::isfinite(v))
    throw ConfigError(e.line, e.key, "expected a number, got '" + std::string(text) + "'");
  return v;
}

inline double to_double(const ScenarioEntry& e) { return to_double(e, e.value); }

inline long long to_integer(const ScenarioEntry& e, std::string_view text, long long lo, long long hi) {
  text = trim(text);
  long long v = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError(e.line, e.key, "expected an integer, got '" + std::string(text) + "'");
  if (v < lo || v > hi)
    throw ConfigError(e.line, e.key, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                                         std::to_string(hi) + "]");
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

inline std::pair<double, double> to_range(const ScenarioEntry& e, std::string_view text) {
  const auto parts = split(text, ',');
  if (parts.size() != 2) throw ConfigError(e.line, e.key, "expected lo,hi");
  const double lo = to_double(e, parts[0]), hi = to_double(e, parts[1]);
  if (!(lo <= hi)) throw ConfigError(e.line, e.key, "range has lo > hi");
  return {lo, hi};
}

inline std::pair<double, double> to_range(const ScenarioEntry& e) { return to_range(e, e.value); }

inline std::uint64_t to_seed(const ScenarioEntry& e) {
  const std::string_view text = trim(e.value);
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError(e.line, e.key, "expected a non-negative integer seed");
  return v;
}

inline Expr to_expr(const ScenarioEntry& e) {
  try {
    return parse(e.value);
  } catch (const SyntaxError& err) {
    throw ConfigError(e.line, e.key, err.what());
  }
}

/// Keys a [family] section may carry besides its kind-specific ones.
inline bool is_override_key(std::string_view key) {
  static const std::set<std::string, std::less<>> keys{"box",   "counts", "points", "mode",     "phi",
                                                       "axis",  "bracket", "scan",  "guess",    "root_tol",
                                                       "singular", "seed"};
  return keys.contains(key);
}

struct SampleKeys {
  const ScenarioEntry* box = nullptr;
  const ScenarioEntry* counts = nullptr;
  const ScenarioEntry* points = nullptr;
  const ScenarioEntry* mode = nullptr;
  const ScenarioEntry* phi = nullptr;
  const ScenarioEntry* axis = nullptr;
};

struct SolverKeys {
  const ScenarioEntry* bracket = nullptr;
  const ScenarioEntry* scan = nullptr;
  const ScenarioEntry* guess = nullptr;
  const ScenarioEntry* root_tol = nullptr;
  const ScenarioEntry* singular = nullptr;
};

inline void collect(const ScenarioSection& s, SampleKeys& k) {
  if (auto* e = s.find("box")) k.box = e;
  if (auto* e = s.find("counts")) k.counts = e;
  if (auto* e = s.find("points")) k.points = e;
  if (auto* e = s.find("mode")) k.mode = e;
  if (auto* e = s.find("phi")) k.phi = e;
  if (auto* e = s.find("axis")) k.axis = e;
}

inline void collect(const ScenarioSection& s, SolverKeys& k) {
  if (auto* e = s.find("bracket")) k.bracket = e;
  if (auto* e = s.find("scan")) k.scan = e;
  if (auto* e = s.find("guess")) k.guess = e;
  if (auto* e = s.find("root_tol")) k.root_tol = e;
  if (auto* e = s.find("singular")) k.singular = e;
}

inline void require_keys(const ScenarioSection& s, const std::set<std::string, std::less<>>& allowed) {
  for (const auto& e : s.entries)
    if (!allowed.contains(e.key)) throw ConfigError(e.line, e.key, "unknown key in [" + s.name + "]");
}

inline const ScenarioEntry& required(const ScenarioSection& s, std::string_view key) {
  if (const auto* e = s.find(key)) return *e;
  throw ConfigError(s.line, std::string(key), "missing for kind '" + (s.find("kind") ? s.find("kind")->value : "") +
                                                   "'");
}

/// F1..Fn style keys, contiguous from 1.
inline std::vector<const ScenarioEntry*> indexed(const ScenarioSection& s, std::string_view prefix) {
  std::vector<const ScenarioEntry*> out;
  for (std::size_t i = 1;; ++i) {
    const auto* e = s.find(std::string(prefix) + std::to_string(i));
    if (!e) break;
    out.push_back(e);
  }
  return out;
}

inline FamilySpec build_family_spec(const ScenarioSection& s) {
  const auto* kind_entry = s.find("kind");
  if (!kind_entry) throw ConfigError(s.line, "kind", "missing family kind");
  const std::string& kind = kind_entry->value;
  auto allow = [&](std::set<std::string, std::less<>> keys) {
    keys.insert("kind");
    keys.insert("name");
    for (const auto& e : s.entries)
      if (!keys.contains(e.key) && !is_override_key(e.key))
        throw ConfigError(e.line, e.key, "unknown key for kind '" + kind + "'");
  };
  auto expr = [&](std::string_view key) { return to_expr(required(s, key)); };

  FamilySpec spec;
  if (kind == "bateman") {
    allow({"F", "G"});
    spec = BatemanSpec{expr("F"), expr("G")};
  } else if (kind == "linear") {
    const auto fs = indexed(s, "F");
    if (fs.size() < 2) throw ConfigError(s.line, "F1", "linear kind needs F1..Fn with n >= 2");
    std::set<std::string, std::less<>> keys{"c"};
    LinearSpec lin;
    for (const auto* e : fs) {
      keys.insert(e->key);
      lin.f.push_back(to_expr(*e));
    }
    allow(keys);
    if (const auto* c = s.find("c")) lin.c = to_double(*c);
    spec = lin;
  } else if (kind == "quadratic") {
    const auto* gram = s.find("gram");
    if (gram) {
      allow({"gram"});
      std::vector<std::vector<Expr>> vectors;
      for (auto part : split(gram->value, ';')) {
        std::vector<Expr> v;
        for (auto comp : split(part, ',')) {
          try {
            v.push_back(parse(comp));
          } catch (const SyntaxError& err) {
            throw ConfigError(gram->line, gram->key, err.what());
          }
        }
        if (!vectors.empty() && v.size() != vectors.front().size())
          throw ConfigError(gram->line, gram->key, "gram vectors differ in length");
        vectors.push_back(std::move(v));
      }
      if (vectors.front().size() < 2) throw ConfigError(gram->line, gram->key, "need at least 2 components");
      try {
        spec = QuadraticSpec{SymFuncMatrix::gram(vectors)};
      } catch (const Error& err) {
        throw ConfigError(gram->line, gram->key, err.what());
      }
    } else {
      const auto& n_entry = required(s, "n");
      const auto n = static_cast<std::size_t>(to_integer(n_entry, n_entry.value, 2, 9));
      std::set<std::string, std::less<>> keys{"n"};
      std::vector<Expr> upper;
      for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = i; j <= n; ++j) {
          const std::string key = "M" + std::to_string(i) + std::to_string(j);
          keys.insert(key);
          if (const auto* e = s.find(key))
            upper.push_back(to_expr(*e));
          else if (i == j)
            throw ConfigError(s.line, key, "diagonal entry missing");
          else
            upper.push_back(Expr::constant(0.0));
        }
      allow(keys);
      try {
        spec = QuadraticSpec{SymFuncMatrix(n, std::move(upper))};
      } catch (const Error& err) {
        throw ConfigError(s.line, "M", err.what());
      }
    }
  } else if (kind == "chaundy") {
    allow({"F", "G", "closed_form"});
    ChaundySpec c{expr("F"), expr("G"), std::nullopt};
    if (const auto* e = s.find("closed_form")) c.closed_form = to_expr(*e);
    spec = c;
  } else if (kind == "explicit_complex") {
    allow({"F", "f", "g"});
    spec = ExplicitComplexSpec{expr("F"), expr("f"), expr("g")};
  } else if (kind == "confocal") {
    allow({"a2", "b2", "c2", "level"});
    // constant entries are squared semi-axes of the confocal system (a^2 + phi);
    // entries mentioning phi are used as given
    auto axis = [&](std::string_view key) {
      const Expr e = expr(key);
      return depends_on(e, "phi") ? e : e + Expr::variable("phi");
    };
    EllipsoidalSpec e{axis("a2"), axis("b2"), axis("c2"), 1.0, 50};
    if (const auto* l = s.find("level")) e.level = to_double(*l);
    spec = e;
  } else if (kind == "a_surface") {
    allow({"A", "n", "target"});
    ASurfaceSpec a{expr("A"), 3, ASurfaceTarget::monge_ampere};
    if (const auto* n = s.find("n")) a.n = static_cast<std::size_t>(to_integer(*n, n->value, 2, 9));
    if (const auto* t = s.find("target")) {
      if (t->value == "monge_ampere")
        a.target = ASurfaceTarget::monge_ampere;
      else if (t->value == "bateman2d")
        a.target = ASurfaceTarget::bateman2d;
      else
        throw ConfigError(t->line, t->key, "expected monge_ampere or bateman2d");
    }
    spec = a;
  } else if (kind == "explicit_expr") {
    allow({"e", "n", "degree"});
    ExplicitExprSpec x{expr("e"), 3, 0.0};
    if (const auto* n = s.find("n")) x.n = static_cast<std::size_t>(to_integer(*n, n->value, 1, 9));
    if (const auto* d = s.find("degree")) x.degree = to_double(*d);
    spec = x;
  } else {
    throw ConfigError(kind_entry->line, "kind", "unknown family kind '" + kind + "'");
  }

  try {
    validate(spec);
  } catch (const Error& err) {
    // name the key holding the offending expression when it can be found
    std::string field;
    const std::string what = err.what();
    for (const auto& e : s.entries) {
      if (e.key == "kind" || e.key == "name" || is_override_key(e.key)) continue;
      try {
        for (const auto& v : free_vars(parse(e.value)))
          if (what.find("'" + v + "'") != std::string::npos) field = e.key;
      } catch (const Error&) {
      }
      if (!field.empty()) break;
    }
    throw ConfigError(field.empty() ? s.line : s.find(field)->line, field, what);
  }
  return spec;
}

inline SampleMode to_mode(const ScenarioEntry& e) {
  if (e.value == "grid") return SampleMode::grid;
  if (e.value == "random") return SampleMode::random;
  if (e.value == "ray") return SampleMode::ray;
  if (e.value == "axis") return SampleMode::axis;
  throw ConfigError(e.line, e.key, "expected grid, random, ray or axis");
}

inline SampleSpec build_sample(const SampleKeys& k, std::size_t n, bool needs_box, std::size_t section_line) {
  SampleSpec spec;
  spec.phi_range = {0.5, 1.5};
  if (k.box) {
    const auto axes = split(k.box->value, ';');
    if (axes.size() != n)
      throw ConfigError(k.box->line, "box",
                        "box has " + std::to_string(axes.size()) + " axes, family needs " + std::to_string(n));
    for (auto a : axes) spec.box.push_back(to_range(*k.box, a));
  } else if (needs_box) {
    throw ConfigError(section_line, "box", "sample box is required");
  } else {
    spec.box.assign(n, {0.5, 1.5});
  }
  if (k.counts && k.points) throw ConfigError(k.points->line, "points", "give either counts or points");
  if (k.counts) {
    const auto parts = split(k.counts->value, ',');
    if (parts.size() != n) throw ConfigError(k.counts->line, "counts", "one count per axis is required");
    for (auto p : parts) spec.counts.push_back(static_cast<int>(to_integer(*k.counts, p, 1, 100000)));
  }
  spec.points = k.points ? static_cast<int>(to_integer(*k.points, k.points->value, 0, 10000000)) : 50;
  spec.mode = k.mode ? to_mode(*k.mode) : (k.counts ? SampleMode::grid : SampleMode::random);
  if (spec.mode == SampleMode::grid && !k.counts)
    throw ConfigError(k.mode ? k.mode->line : section_line, "counts", "grid mode needs counts");
  if (spec.mode != SampleMode::grid && k.counts)
    throw ConfigError(k.counts->line, "counts", "counts only apply to grid mode");
  if (k.phi) spec.phi_range = to_range(*k.phi);
  if (k.axis) spec.axis_range = to_range(*k.axis);
  return spec;
}

}  // namespace scenario_detail

/// Parse and validate a scenario from a stream.
inline ScenarioConfig parse_scenario(std::istream& in) {
  using namespace scenario_detail;
  ScenarioConfig cfg;
  cfg.sections = parse_sections(in);

  const ScenarioSection* scenario = nullptr;
  const ScenarioSection* sample = nullptr;
  const ScenarioSection* solver = nullptr;
  const ScenarioSection* checks = nullptr;
  const ScenarioSection* output = nullptr;
  std::vector<const ScenarioSection*> families;
  for (const auto& s : cfg.sections) {
    const ScenarioSection** slot = nullptr;
    if (s.name == "scenario")
      slot = &scenario;
    else if (s.name == "sample")
      slot = &sample;
    else if (s.name == "solver")
      slot = &solver;
    else if (s.name == "checks")
      slot = &checks;
    else if (s.name == "output")
      slot = &output;
    else if (s.name == "family")
      families.push_back(&s);
    else
      throw ConfigError(s.line, "", "unknown section [" + s.name + "]");
    if (slot) {
      if (*slot) throw ConfigError(s.line, "", "section [" + s.name + "] given twice");
      *slot = &s;
    }
  }
  if (families.empty()) throw ConfigError(std::nullopt, "family", "scenario has no [family] section");

  if (scenario) {
    require_keys(*scenario, {"name", "seed"});
    if (const auto* e = scenario->find("name")) cfg.name = e->value;
    if (const auto* e = scenario->find("seed")) {
      cfg.seed = to_seed(*e);
      cfg.seed_given = true;
    }
  }
  SampleKeys sample_keys;
  if (sample) {
    require_keys(*sample, {"box", "counts", "points", "mode", "phi", "axis", "seed"});
    collect(*sample, sample_keys);
    if (const auto* e = sample->find("seed")) {
      const std::uint64_t s = to_seed(*e);
      if (cfg.seed_given && s != cfg.seed) throw ConfigError(e->line, "seed", "conflicts with [scenario] seed");
      cfg.seed = s;
      cfg.seed_given = true;
    }
  }
  SolverKeys solver_keys;
  if (solver) {
    require_keys(*solver, {"bracket", "scan", "guess", "root_tol", "singular"});
    collect(*solver, solver_keys);
  }
  if (checks) {
    for (const auto& e : checks->entries) {
      if (e.key == "run") {
        if (e.value == "expected") continue;
        for (auto name : split(e.value, ',')) {
          const auto c = parse_check(name);
          if (!c) throw ConfigError(e.line, e.key, "unknown check '" + std::string(name) + "'");
          cfg.checks.run.push_back(*c);
        }
      } else if (e.key == "residual_tol") {
        cfg.checks.residual_tol = to_double(e);
        if (!(*cfg.checks.residual_tol > 0.0)) throw ConfigError(e.line, e.key, "tolerance must be positive");
      } else if (e.key.starts_with("tol.")) {
        const auto c = parse_check(std::string_view(e.key).substr(4));
        if (!c) throw ConfigError(e.line, e.key, "unknown check in tolerance key");
        const double v = to_double(e);
        if (!(v > 0.0)) throw ConfigError(e.line, e.key, "tolerance must be positive");
        cfg.checks.tolerance[*c] = v;
      } else {
        throw ConfigError(e.line, e.key, "unknown key in [checks]");
      }
    }
  }
  if (output) {
    require_keys(*output, {"json", "csv"});
    if (const auto* e = output->find("json")) cfg.json_path = e->value;
    if (const auto* e = output->find("csv")) cfg.csv_path = e->value;
  }

  for (std::size_t index = 0; index < families.size(); ++index) {
    const ScenarioSection& s = *families[index];
    FamilyConfig fc;
    fc.line = s.line;
    fc.spec = build_family_spec(s);
    fc.name = s.find("name") ? s.find("name")->value : kind_name(fc.spec) + "-" + std::to_string(index);
    const std::size_t n = coordinates(fc.spec).size();

    SampleKeys sk = sample_keys;
    collect(s, sk);
    SolverKeys vk = solver_keys;
    collect(s, vk);
    const bool confocal = std::holds_alternative<EllipsoidalSpec>(fc.spec);
    fc.sample = build_sample(sk, n, !confocal, s.line);
    const bool explicit_field = std::holds_alternative<ExplicitComplexSpec>(fc.spec) ||
                                std::holds_alternative<ExplicitExprSpec>(fc.spec) ||
                                (std::holds_alternative<ChaundySpec>(fc.spec) &&
                                 std::get<ChaundySpec>(fc.spec).closed_form.has_value());
    if (explicit_field && (fc.sample.mode == SampleMode::ray || fc.sample.mode == SampleMode::axis))
      throw ConfigError(sk.mode ? sk.mode->line : s.line, "mode", "explicit fields are sampled in grid or random mode");
    std::uint64_t seed = cfg.seed;
    if (const auto* e = s.find("seed")) seed = to_seed(*e);
    fc.sample.seed = derive_seed(seed, index);

    if (vk.guess && vk.bracket) throw ConfigError(vk.guess->line, "guess", "give either guess or bracket");
    if (vk.guess) {
      fc.branch = Guess{to_double(*vk.guess)};
    } else {
      Bracket b{-10.0, 10.0, 256};
      if (vk.bracket) std::tie(b.lo, b.hi) = to_range(*vk.bracket);
      if (vk.scan) b.scan = static_cast<int>(to_integer(*vk.scan, vk.scan->value, 1, 1000000));
      fc.branch = b;
    }
    if (confocal && !vk.bracket) fc.branch = default_branch(fc.spec);
    if (vk.root_tol) fc.root_tol = to_double(*vk.root_tol);
    if (vk.singular) fc.singular_threshold = to_double(*vk.singular);
    if (!(fc.root_tol > 0.0)) throw ConfigError(vk.root_tol->line, "root_tol", "must be positive");
    if (!(fc.singular_threshold >= 0.0)) throw ConfigError(vk.singular->line, "singular", "must be non-negative");
    if (const auto* e = std::get_if<EllipsoidalSpec>(&fc.spec)) {
      fc.level = e->level;
      auto& spec = std::get<EllipsoidalSpec>(fc.spec);
      spec.points = fc.sample.points;
    }
    cfg.families.push_back(std::move(fc));
  }
  return cfg;
}

inline ScenarioConfig parse_scenario_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_scenario(in);
}

/// Load and validate a scenario file.
inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::nullopt, "", "cannot open scenario file '" + path + "'");
  return parse_scenario(in);
}

}  // namespace implicit_pde
