// SPDX-License-Identifier: MIT
#pragma once

#include <implicit_pde/errors.hpp>
#include <implicit_pde/eval.hpp>
#include <implicit_pde/expr.hpp>
#include <implicit_pde/implicit_field.hpp>
#include <implicit_pde/linalg.hpp>
#include <implicit_pde/random.hpp>
#include <implicit_pde/residuals.hpp>
#include <implicit_pde/sym_diff.hpp>

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace implicit_pde {

// Conventions for the quadratic ansatz  sum_ij M_ij(phi) x_i x_j = 1:
//
//   lambda = +1/2 sum_ij M'_ij x_i x_j
//
// With this sign the first derivative of the constraint reads
// lambda phi_p + (M x)_p = 0, the pairwise eliminant reads
// lambda f_pq + (M_pp phi_q^2 - 2 M_pq phi_p phi_q + M_qq phi_p^2) = 0, and
// lambda sum_j phi_j x_j = -1.

/// Symmetric n x n matrix of expressions in the field variable.
class SymFuncMatrix {
 public:
  SymFuncMatrix() = default;

  /// entries in packed upper-triangle order: (0,0), (0,1), ..., (0,n-1), (1,1), ...
  SymFuncMatrix(std::size_t n, std::vector<Expr> upper, std::string field = "phi")
      : n_(n), entries_(std::move(upper)), field_(std::move(field)) {
    if (entries_.size() != n * (n + 1) / 2)
      throw Error(ErrorKind::arity_mismatch, "expected " + std::to_string(n * (n + 1) / 2) + " upper entries");
    for (const auto& e : entries_)
      for (const auto& v : free_vars(e))
        if (v != field_) throw Error(ErrorKind::arity_mismatch, "matrix entry uses variable '" + v + "'");
  }

  std::size_t size() const { return n_; }
  const std::string& field() const { return field_; }

  const Expr& at(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return entries_[i * n_ - i * (i - 1) / 2 + (j - i)];
  }

  const std::vector<Expr>& upper() const { return entries_; }

  SymMatrix evaluate(double phi) const {
    SymMatrix m(n_);
    const Bindings b{{field_, phi}};
    for (std::size_t k = 0; k < entries_.size(); ++k) m.packed()[k] = eval(entries_[k], b);
    return m;
  }

  /// Entrywise d/dphi.
  SymFuncMatrix derivative() const {
    std::vector<Expr> d;
    d.reserve(entries_.size());
    for (const auto& e : entries_) d.push_back(sym_diff(e, field_));
    return SymFuncMatrix(n_, std::move(d), field_);
  }

  /// sum_ij M_ij x_i x_j - 1 over the named coordinates.
  Expr constraint(const std::vector<std::string>& coords) const {
    if (coords.size() != n_) throw Error(ErrorKind::dimension_mismatch, "coordinate count differs from matrix size");
    Expr sum = Expr::constant(-1.0);
    bool first = true;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i; j < n_; ++j) {
        if (at(i, j).is_constant(0.0)) continue;
        Expr term = at(i, j) * Expr::variable(coords[i]) * Expr::variable(coords[j]);
        if (i != j) term = Expr::constant(2.0) * term;
        sum = first ? term - Expr::constant(1.0) : Expr::binary(BinaryOp::add, term, sum);
        first = false;
      }
    return sum;
  }

  /// Gram construction sum_k v_k v_k^T; rank at most the number of vectors.
  static SymFuncMatrix gram(const std::vector<std::vector<Expr>>& vectors, std::string field = "phi") {
    const std::size_t n = vectors.front().size();
    std::vector<Expr> upper;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        Expr sum;
        bool first = true;
        for (const auto& v : vectors) {
          Expr term = v[i] * v[j];
          sum = first ? term : sum + term;
          first = false;
        }
        upper.push_back(sum);
      }
    return SymFuncMatrix(n, std::move(upper), std::move(field));
  }

 private:
  std::size_t n_ = 0;
  std::vector<Expr> entries_;
  std::string field_ = "phi";
};

inline std::vector<std::string> default_coords(std::size_t n) {
  std::vector<std::string> c;
  for (std::size_t i = 1; i <= n; ++i) c.push_back("x" + std::to_string(i));
  return c;
}

/// The implicit family sum_ij M_ij(phi) x_i x_j = 1 over x1..xn.
inline ImplicitFamily quadratic_family(const SymFuncMatrix& m, BranchPolicy branch = Bracket{}) {
  return make_family(m.constraint(default_coords(m.size())), default_coords(m.size()), branch, m.field());
}

struct AnsatzState {
  std::vector<double> x;
  double phi = 0.0;
  SymMatrix m;
  SymMatrix dm;
  SymMatrix d2m;
  double lambda = 0.0;
  double mu = 0.0;
  /// x^T M x - 1 at the state
  double constraint_residual = 0.0;
};

namespace detail {

inline double quadratic_form(const SymMatrix& m, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) s += m(i, j) * x[i] * x[j];
  return s;
}

inline double pair_f(const FieldJet& j, std::size_t p, std::size_t q) {
  if (p == q) return 0.0;
  return f_pair(j, p, q).raw;
}

inline void require_nonzero_gradient(const FieldJet& j) {
  double scale = 0.0;
  for (double g : j.grad) scale = std::max(scale, std::abs(g));
  for (std::size_t r = 0; r < j.dim(); ++r)
    if (!(std::abs(j.grad[r]) > 1e-14 * scale))
      throw Error(ErrorKind::zero_derivative, "phi_" + std::to_string(r + 1) + " vanishes");
}

/// sum_{r,s} f_rs x_r x_s / (phi_r phi_s)
inline double weighted_f_sum(const FieldJet& j) {
  double s = 0.0;
  for (std::size_t r = 0; r < j.dim(); ++r)
    for (std::size_t t = 0; t < j.dim(); ++t)
      if (r != t) s += pair_f(j, r, t) * j.x[r] * j.x[t] / (j.grad[r] * j.grad[t]);
  return s;
}

}  // namespace detail

/// lambda, mu and M, M', M'' at a solved point of the quadratic family.
inline AnsatzState build_state(const SymFuncMatrix& m, const FieldJet& jet) {
  if (jet.dim() != m.size()) throw Error(ErrorKind::dimension_mismatch, "jet and matrix dimensions differ");
  detail::require_nonzero_gradient(jet);
  const SymFuncMatrix dm = m.derivative();
  AnsatzState s;
  s.x = jet.x;
  s.phi = jet.phi;
  s.m = m.evaluate(jet.phi);
  s.dm = dm.evaluate(jet.phi);
  s.d2m = dm.derivative().evaluate(jet.phi);
  s.lambda = 0.5 * detail::quadratic_form(s.dm, s.x);
  s.mu = s.lambda * detail::weighted_f_sum(jet);
  s.constraint_residual = detail::quadratic_form(s.m, s.x) - 1.0;
  return s;
}

/// ||M x + lambda grad phi|| / ||M x||.
inline double gradient_relation_residual(const AnsatzState& s, const FieldJet& jet) {
  double num = 0.0, den = 0.0;
  for (std::size_t p = 0; p < s.m.size(); ++p) {
    double mx = 0.0;
    for (std::size_t j = 0; j < s.m.size(); ++j) mx += s.m(p, j) * s.x[j];
    num += (mx + s.lambda * jet.grad[p]) * (mx + s.lambda * jet.grad[p]);
    den += mx * mx;
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

/// lambda * sum_j phi_j x_j; -1 on every ansatz state.
inline double lambda_consistency(const AnsatzState& s, const FieldJet& jet) {
  double dot = 0.0;
  for (std::size_t j = 0; j < jet.dim(); ++j) dot += jet.grad[j] * s.x[j];
  return s.lambda * dot;
}

/// lambda f_pq + (M_pp phi_q^2 - 2 M_pq phi_p phi_q + M_qq phi_p^2).
inline Residual eliminant_residual(const AnsatzState& s, const FieldJet& jet, std::size_t p, std::size_t q) {
  if (p == q) throw Error(ErrorKind::index_out_of_range, "eliminant needs distinct indices");
  TermSum sum;
  detail::add_pair_terms(sum, jet, p, q, s.lambda);
  const double gp = jet.grad[p], gq = jet.grad[q];
  sum += s.m(p, p) * gq * gq;
  sum -= 2.0 * s.m(p, q) * gp * gq;
  sum += s.m(q, q) * gp * gp;
  return sum.result();
}

enum class GeneralEliminantForm {
  standard,     ///< last term weighted by phi_p phi_q (antisymmetric pattern)
  misweighted,  ///< last term weighted by phi_p phi_s; not an identity
};

/// (lambda phi_pq + M_pq) phi_r phi_s - (lambda phi_rq + M_rq) phi_p phi_s
///   - (lambda phi_ps + M_ps) phi_r phi_q + (lambda phi_rs + M_rs) phi_p phi_q
inline Residual general_eliminant_residual(const AnsatzState& s, const FieldJet& jet, std::size_t p, std::size_t q,
                                           std::size_t r, std::size_t t,
                                           GeneralEliminantForm form = GeneralEliminantForm::standard) {
  const std::size_t n = jet.dim();
  if (p >= n || q >= n || r >= n || t >= n) throw Error(ErrorKind::index_out_of_range, "eliminant index");
  const auto& g = jet.grad;
  const std::array<std::array<std::size_t, 2>, 4> idx{{{p, q}, {r, q}, {p, t}, {r, t}}};
  const std::array<double, 4> weight{g[r] * g[t], -g[p] * g[t], -g[r] * g[q],
                                     form == GeneralEliminantForm::standard ? g[p] * g[q] : g[p] * g[t]};
  // lambda terms first, then M terms, so coincident indices cancel exactly
  TermSum sum;
  for (std::size_t k = 0; k < 4; ++k) sum += weight[k] * s.lambda * jet.hess(idx[k][0], idx[k][1]);
  for (std::size_t k = 0; k < 4; ++k) sum += weight[k] * s.m(idx[k][0], idx[k][1]);
  return sum.result();
}

/// Recover M at a point from the field jet alone by solving the n gradient
/// relations and the n(n-1)/2 pairwise eliminants as a linear system in the
/// n(n+1)/2 entries, with lambda = -1 / sum_i phi_i x_i. The result is
/// normalized so that x^T M x = 1.
inline SymMatrix recover_M_linear(const FieldJet& jet) {
  const std::size_t n = jet.dim();
  const std::size_t unknowns = n * (n + 1) / 2;
  const auto& x = jet.x;
  const auto& g = jet.grad;

  double dot = 0.0, gnorm = 0.0, xnorm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += g[i] * x[i];
    gnorm += g[i] * g[i];
    xnorm += x[i] * x[i];
  }
  if (gnorm == 0.0) throw Error(ErrorKind::rank_deficient_system, "field gradient vanishes");
  if (!(std::abs(dot) > 1e-12 * std::sqrt(gnorm * xnorm)))
    throw Error(ErrorKind::rank_deficient_system, "x is orthogonal to grad phi; lambda is undefined");
  const double lambda = -1.0 / dot;

  SymMatrix index_of(n);  // column of each unknown
  for (std::size_t k = 0; k < unknowns; ++k) index_of.packed()[k] = static_cast<double>(k);
  auto col = [&](std::size_t i, std::size_t j) { return static_cast<Eigen::Index>(index_of(i, j)); };

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(unknowns), static_cast<Eigen::Index>(unknowns));
  Eigen::VectorXd b(static_cast<Eigen::Index>(unknowns));
  Eigen::Index row = 0;
  for (std::size_t p = 0; p < n; ++p, ++row) {
    for (std::size_t j = 0; j < n; ++j) a(row, col(p, j)) += x[j];
    b(row) = -lambda * g[p];
  }
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p + 1; q < n; ++q, ++row) {
      a(row, col(p, p)) += g[q] * g[q];
      a(row, col(p, q)) += -2.0 * g[p] * g[q];
      a(row, col(q, q)) += g[p] * g[p];
      b(row) = -lambda * detail::pair_f(jet, p, q);
    }

  // equilibrate columns so the rank decision is scale free
  Eigen::VectorXd col_scale = a.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < col_scale.size(); ++c) {
    if (col_scale(c) == 0.0) throw Error(ErrorKind::rank_deficient_system, "unknown M entry does not appear");
    a.col(c) /= col_scale(c);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(unknowns))
    throw Error(ErrorKind::rank_deficient_system,
                "rank " + std::to_string(qr.rank()) + " < " + std::to_string(unknowns));
  Eigen::VectorXd sol = qr.solve(b);
  SymMatrix m(n);
  for (std::size_t k = 0; k < unknowns; ++k) m.packed()[k] = sol(static_cast<Eigen::Index>(k)) / col_scale(k);
  const double form = detail::quadratic_form(m, x);
  for (double& v : m.packed()) v /= form;
  return m;
}

enum class ClosedForm {
  two_variable_rational,  ///< n = 2, quotient by (x . grad phi)^2
  two_variable_lambda,    ///< n = 2, lambda^2 (phi_p phi_q + ...) form
  multivariable,          ///< any n, all phi_r nonzero
  multivariable_naive_diagonal,  ///< multivariable with the diagonal missing its correction (not valid)
};

/// Closed-form M at a point, with lambda = -1 / sum_i phi_i x_i.
inline SymMatrix closed_form_M(const FieldJet& jet, ClosedForm form) {
  const std::size_t n = jet.dim();
  const auto& x = jet.x;
  const auto& g = jet.grad;
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += g[i] * x[i];
  if (dot == 0.0) throw Error(ErrorKind::zero_derivative, "x . grad phi vanishes");
  const double lambda = -1.0 / dot;
  SymMatrix m(n);

  if (form == ClosedForm::two_variable_rational || form == ClosedForm::two_variable_lambda) {
    detail::require_dim(jet, 2, "two-variable closed form");
    const double p1 = g[0], p2 = g[1], x1 = x[0], x2 = x[1];
    const double f12 = detail::pair_f(jet, 0, 1);
    if (form == ClosedForm::two_variable_rational) {
      const double d = x1 * x1 * p1 * p1 + 2.0 * x1 * x2 * p1 * p2 + x2 * x2 * p2 * p2;
      m(0, 0) = -lambda * (x1 * p1 * p1 * p1 + x2 * p1 * p1 * p2 + x2 * x2 * f12) / d;
      m(1, 1) = -lambda * (x1 * x1 * f12 + x1 * p1 * p2 * p2 + x2 * p2 * p2 * p2) / d;
      m(0, 1) = -lambda * (x1 * p1 * p1 * p2 + x2 * p1 * p2 * p2 - x1 * x2 * f12) / d;
    } else {
      const double l2 = lambda * lambda;
      m(0, 0) = l2 * (p1 * p1 - lambda * x2 * x2 * f12);
      m(1, 1) = l2 * (p2 * p2 - lambda * x1 * x1 * f12);
      m(0, 1) = l2 * (p1 * p2 + lambda * x1 * x2 * f12);
    }
    return m;
  }

  detail::require_nonzero_gradient(jet);
  const double mu = lambda * detail::weighted_f_sum(jet);
  const double l2 = lambda * lambda;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p; q < n; ++q) {
      double others = 0.0;  // sum_{r != p,q} phi_r x_r
      for (std::size_t r = 0; r < n; ++r)
        if (r != p && r != q) others += g[r] * x[r];
      double sum_q = 0.0;  // sum_{r != p} f_qr x_r / (phi_q phi_r)
      for (std::size_t r = 0; r < n; ++r)
        if (r != p) sum_q += detail::pair_f(jet, q, r) * x[r] / (g[q] * g[r]);
      double sum_p = 0.0;  // sum_{r != q} f_pr x_r / (phi_p phi_r)
      for (std::size_t r = 0; r < n; ++r)
        if (r != q) sum_p += detail::pair_f(jet, p, r) * x[r] / (g[p] * g[r]);
      const double f_pq = detail::pair_f(jet, p, q);
      m(p, q) = l2 * (g[p] * g[q] -
                      0.5 * (others * f_pq / (g[p] * g[q]) - g[p] * sum_q - g[q] * sum_p - g[p] * g[q] * mu));
    }
  if (form == ClosedForm::multivariable_naive_diagonal) {
    for (std::size_t p = 0; p < n; ++p) {
      double sum = 0.0;
      for (std::size_t r = 0; r < n; ++r)
        if (r != p) sum += x[r] / g[r] * detail::pair_f(jet, p, r);
      m(p, p) = l2 * (g[p] * g[p] + sum - g[p] * g[p] * mu);
    }
  }
  return m;
}

/// Determinant of the quadratic form's coefficient matrix.
inline double discriminant(const SymMatrix& m) { return determinant(m.dense()); }

struct DetIdentity {
  double lhs = 0.0;
  double rhs_core = 0.0;
  /// |lhs| / |rhs_core|; 1 when the identity holds
  double ratio = 0.0;
  /// sign of lhs / rhs_core
  int sign = 0;
};

/// The bordered determinant with border (0, phi_1^2, ..., phi_n^2) and body
/// f_pq (zero diagonal), compared with 2^(n-1) prod phi_i^2 times the UFE
/// determinant. The two agree up to a sign depending on n.
inline DetIdentity det_identity_check(const FieldJet& jet) {
  const std::size_t n = jet.dim();
  for (std::size_t i = 0; i < n; ++i)
    if (jet.grad[i] == 0.0) throw Error(ErrorKind::zero_derivative, "phi_" + std::to_string(i + 1) + " vanishes");
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n + 1, n + 1);
  double prod = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sq = jet.grad[i] * jet.grad[i];
    b(0, i + 1) = b(i + 1, 0) = sq;
    prod *= sq;
    for (std::size_t k = 0; k < n; ++k)
      if (k != i) b(i + 1, k + 1) = detail::pair_f(jet, i, k);
  }
  DetIdentity out;
  out.lhs = determinant(b);
  out.rhs_core = std::ldexp(prod, static_cast<int>(n) - 1) * ufe_residual(jet).raw;
  out.ratio = std::abs(out.lhs) / std::abs(out.rhs_core);
  out.sign = (out.lhs > 0.0) == (out.rhs_core > 0.0) ? 1 : -1;
  return out;
}

/// True when det M(phi) vanishes (relative to ||M||_F^n) at `samples` seeded
/// values of phi drawn from phi_range. Values where M cannot be evaluated are
/// skipped; at least half of the draws must evaluate.
inline bool discriminant_vanishes(const SymFuncMatrix& m, std::pair<double, double> phi_range, std::uint64_t seed,
                                  int samples = 20) {
  Rng rng(derive_seed(seed, 0xd15c));
  int evaluated = 0;
  for (int k = 0; k < samples; ++k) {
    SymMatrix v;
    try {
      v = m.evaluate(rng.uniform(phi_range.first, phi_range.second));
    } catch (const Error&) {
      continue;
    }
    ++evaluated;
    const double norm = v.dense().norm();
    if (!(std::abs(discriminant(v)) <= 1e-10 * std::pow(norm, static_cast<double>(m.size())))) return false;
  }
  return 2 * evaluated >= samples;
}

/// UFE residual of the quadratic family over a sample, without the gate.
inline ResidualReport ufe_over_sample(const SymFuncMatrix& m, const SampleSpec& spec, double tolerance = 1e-7) {
  const ImplicitFamily fam = quadratic_family(m, Bracket{spec.phi_range.first, spec.phi_range.second, 64});
  ResidualReport report{"ufe", tolerance, {}};
  for (const auto& sp : sample(fam, spec)) {
    if (sp.ok())
      report.add(sp.index, sp.x, sp.jet->phi, ufe_residual(*sp.jet));
    else
      report.add_error(sp.index, sp.x, sp.message);
  }
  return report;
}

/// Check that det M vanishes identically, then verify the UFE over a sample of
/// the implicit quadratic family.
inline ResidualReport ufe_gate_verify(const SymFuncMatrix& m, const SampleSpec& spec, double tolerance = 1e-7) {
  if (!discriminant_vanishes(m, spec.phi_range, spec.seed))
    throw Error(ErrorKind::gate_not_satisfied, "det M(phi) does not vanish identically");
  return ufe_over_sample(m, spec, tolerance);
}

}  // namespace implicit_pde
