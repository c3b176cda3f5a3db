// SPDX-License-Identifier: MIT
#pragma once

#include <implicit_pde/errors.hpp>
#include <implicit_pde/expr.hpp>
#include <implicit_pde/implicit_field.hpp>
#include <implicit_pde/jet.hpp>
#include <implicit_pde/linalg.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace implicit_pde {

/// A residual together with its natural scale: the sum of |additive terms| of
/// the equation it came from. The normalized value is dimensionless.
struct Residual {
  double raw = 0.0;
  double scale = 0.0;

  double normalized() const { return raw / std::max(scale, 1e-300); }
};

/// Accumulates the signed terms of an equation so raw and scale come from the
/// same expansion.
class TermSum {
 public:
  TermSum& operator+=(double term) {
    raw_ += term;
    scale_ += std::abs(term);
    return *this;
  }
  TermSum& operator-=(double term) { return *this += -term; }

  Residual result() const { return {raw_, scale_}; }

 private:
  double raw_ = 0.0;
  double scale_ = 0.0;
};

enum class PointStatus { pass, fail, error };

constexpr std::string_view to_string(PointStatus s) {
  switch (s) {
    case PointStatus::pass: return "pass";
    case PointStatus::fail: return "fail";
    case PointStatus::error: return "error";
  }
  return "?";
}

struct PointRecord {
  std::size_t index = 0;
  std::vector<double> x;
  double phi = 0.0;
  Residual residual;
  PointStatus status = PointStatus::pass;
  std::string message;
};

/// Per-point residuals of one check with summary statistics. pass holds iff
/// the largest |normalized| residual is within tolerance; points that errored
/// are kept but excluded from the statistics.
struct ResidualReport {
  std::string check;
  double tolerance = 0.0;
  std::vector<PointRecord> points;

  void add(std::size_t index, std::span<const double> x, double phi, Residual r) {
    PointRecord rec;
    rec.index = index;
    rec.x.assign(x.begin(), x.end());
    rec.phi = phi;
    rec.residual = r;
    rec.status = std::abs(r.normalized()) <= tolerance ? PointStatus::pass : PointStatus::fail;
    points.push_back(std::move(rec));
  }

  void add_error(std::size_t index, std::span<const double> x, std::string message) {
    PointRecord rec;
    rec.index = index;
    rec.x.assign(x.begin(), x.end());
    rec.status = PointStatus::error;
    rec.message = std::move(message);
    points.push_back(std::move(rec));
  }

  std::size_t evaluated() const {
    return static_cast<std::size_t>(
        std::count_if(points.begin(), points.end(), [](const auto& p) { return p.status != PointStatus::error; }));
  }

  std::size_t errors() const { return points.size() - evaluated(); }

  double max_normalized() const {
    double m = 0.0;
    for (const auto& p : points)
      if (p.status != PointStatus::error) m = std::max(m, std::abs(p.residual.normalized()));
    return m;
  }

  double mean_normalized() const {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& p : points)
      if (p.status != PointStatus::error) {
        sum += std::abs(p.residual.normalized());
        ++count;
      }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
  }

  bool pass() const { return max_normalized() <= tolerance; }
};

namespace detail {

inline void require_dim(const FieldJet& j, std::size_t n, const char* what) {
  if (j.dim() != n)
    throw Error(ErrorKind::dimension_mismatch,
                std::string(what) + " needs n=" + std::to_string(n) + ", got n=" + std::to_string(j.dim()));
}

inline void require_index(const FieldJet& j, std::size_t p) {
  if (p >= j.dim())
    throw Error(ErrorKind::index_out_of_range, "index " + std::to_string(p) + " out of range for n=" +
                                                   std::to_string(j.dim()));
}

inline void add_pair_terms(TermSum& sum, const FieldJet& j, std::size_t p, std::size_t q, double weight) {
  const double gp = j.grad[p], gq = j.grad[q];
  sum += weight * gp * gp * j.hess(q, q);
  sum += weight * -2.0 * gp * gq * j.hess(p, q);
  sum += weight * gq * gq * j.hess(p, p);
}

}  // namespace detail

/// f_pq = phi_p^2 phi_qq - 2 phi_p phi_q phi_pq + phi_q^2 phi_pp (0-based p, q).
inline Residual f_pair(const FieldJet& j, std::size_t p, std::size_t q) {
  detail::require_index(j, p);
  detail::require_index(j, q);
  if (p == q) throw Error(ErrorKind::index_out_of_range, "f_pair needs distinct indices");
  TermSum sum;
  detail::add_pair_terms(sum, j, p, q, 1.0);
  return sum.result();
}

/// Bateman equation in the two coordinates of j.
inline Residual bateman_residual(const FieldJet& j) {
  detail::require_dim(j, 2, "bateman_residual");
  return f_pair(j, 0, 1);
}

/// The (n+1)x(n+1) matrix [[0, grad^T], [grad, hess]].
inline Eigen::MatrixXd bordered_hessian(const FieldJet& j) {
  const std::size_t n = j.dim();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    b(0, i + 1) = j.grad[i];
    b(i + 1, 0) = j.grad[i];
    for (std::size_t k = 0; k < n; ++k) b(i + 1, k + 1) = j.hess(i, k);
  }
  return b;
}

/// Universal Field Equation: determinant of the bordered Hessian. The scale is
/// the permanent of its absolute values (sum of |Leibniz terms|).
inline Residual ufe_residual(const FieldJet& j) {
  if (j.dim() < 2) throw Error(ErrorKind::dimension_mismatch, "ufe_residual needs n >= 2");
  const Eigen::MatrixXd b = bordered_hessian(j);
  return {determinant(b), determinant_scale(b)};
}

/// f_12 + f_23 + f_13.
inline Residual sum_bateman_residual(const FieldJet& j) {
  detail::require_dim(j, 3, "sum_bateman_residual");
  TermSum sum;
  detail::add_pair_terms(sum, j, 0, 1, 1.0);
  detail::add_pair_terms(sum, j, 1, 2, 1.0);
  detail::add_pair_terms(sum, j, 0, 2, 1.0);
  return sum.result();
}

enum class ComplexBatemanForm {
  standard,      ///< phi_x phi_z phi_yw - phi_x phi_w phi_yz - phi_y phi_z phi_xw + phi_y phi_w phi_xz
  sign_flipped,  ///< last two signs flipped; fails on phi = (z - x)/(y - w)
};

/// Complex Bateman equation over coordinates ordered (x, y, z, w). The
/// standard form is phi_w^2 (u_x phi_y - u_y phi_x) with u = phi_z/phi_w,
/// which vanishes whenever u depends on (z, w, phi) only.
inline Residual complex_bateman_residual(const FieldJet& j,
                                         ComplexBatemanForm form = ComplexBatemanForm::standard) {
  detail::require_dim(j, 4, "complex_bateman_residual");
  enum { x, y, z, w };
  const auto& g = j.grad;
  const double s = form == ComplexBatemanForm::standard ? -1.0 : 1.0;
  TermSum sum;
  sum += g[x] * g[z] * j.hess(y, w);
  sum -= g[x] * g[w] * j.hess(y, z);
  sum += s * g[y] * g[z] * j.hess(x, w);
  sum -= s * g[y] * g[w] * j.hess(x, z);
  return sum.result();
}

/// phi_1^2 phi_2 x_1 + phi_1 phi_2^2 x_2 - x_1 x_2 f_12, from the diagonal
/// quadratic ansatz.
inline Residual example2_residual(const FieldJet& j) {
  detail::require_dim(j, 2, "example2_residual");
  const double g1 = j.grad[0], g2 = j.grad[1];
  const double x1 = j.x[0], x2 = j.x[1];
  TermSum sum;
  sum += g1 * g1 * g2 * x1;
  sum += g1 * g2 * g2 * x2;
  detail::add_pair_terms(sum, j, 0, 1, -x1 * x2);
  return sum.result();
}

/// Jet of h(phi) for h = exp, by the chain rule.
inline FieldJet compose_exp(const FieldJet& j) {
  FieldJet r = j;
  const double e = std::exp(j.phi);
  r.phi = e;
  for (std::size_t p = 0; p < j.dim(); ++p) r.grad[p] = e * j.grad[p];
  for (std::size_t p = 0; p < j.dim(); ++p)
    for (std::size_t q = p; q < j.dim(); ++q) r.hess(p, q) = e * (j.hess(p, q) + j.grad[p] * j.grad[q]);
  return r;
}

struct ASurfaceResiduals {
  Residual monge_ampere;
  Residual bateman2d;
};

/// Residuals of the surface t = A(phi, x_1, ..., x_k) at fixed phi: the
/// Hessian determinant of A in the x variables, and (k = 2 only) the
/// two-dimensional Bateman expression (1+A_1^2)A_22 + (1+A_2^2)A_11 - 2A_1A_2A_12.
/// coords names the x variables; variables of A absent from coords and not
/// named field must not occur.
inline ASurfaceResiduals a_surface_residuals(const Expr& a, std::span<const std::string> coords,
                                             std::span<const double> x, double phi,
                                             const std::string& field = "phi") {
  const Jet2 j = jet_eval(a, x, coords, Bindings{{field, phi}});
  const std::size_t k = coords.size();
  Eigen::MatrixXd h(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t m = 0; m < k; ++m) h(i, m) = j.hess(i, m);
  ASurfaceResiduals out;
  out.monge_ampere = {determinant(h), determinant_scale(h)};
  if (k == 2) {
    const double a1 = j.grad(0), a2 = j.grad(1);
    TermSum sum;
    sum += j.hess(1, 1);
    sum += a1 * a1 * j.hess(1, 1);
    sum += j.hess(0, 0);
    sum += a2 * a2 * j.hess(0, 0);
    sum -= 2.0 * a1 * a2 * j.hess(0, 1);
    out.bateman2d = sum.result();
  }
  return out;
}

struct FirstOrderResiduals {
  /// u_x - v u_y, v_z - u v_w, phi_x - v phi_y, phi_z - u phi_w
  std::array<Residual, 4> residuals;
  double u = 0.0;
  double v = 0.0;
};

namespace detail {

inline FirstOrderResiduals assemble_first_order(const FieldJet& phi, double u, double v, double u_x, double u_y,
                                                double v_z, double v_w) {
  enum { x, y, z, w };
  FirstOrderResiduals out;
  out.u = u;
  out.v = v;
  auto pair = [](double a, double b) {
    TermSum s;
    s += a;
    s -= b;
    return s.result();
  };
  out.residuals[0] = pair(u_x, v * u_y);
  out.residuals[1] = pair(v_z, u * v_w);
  out.residuals[2] = pair(phi.grad[x], v * phi.grad[y]);
  out.residuals[3] = pair(phi.grad[z], u * phi.grad[w]);
  return out;
}

}  // namespace detail

/// First-order form of the complex Bateman equation for the Chaundy family
/// F(x, y, phi) = G(z, w, phi), with v = F_x/F_y and u = G_z/G_w. The u, v
/// derivatives go through the implicit phi: u_x = U_phi phi_x, and so on.
/// jet must be the FieldJet of the family at the point (coordinates x, y, z, w).
inline FirstOrderResiduals first_order_system_residual(const Expr& f, const Expr& g, const FieldJet& jet,
                                                       double singular_threshold = kDefaultSingularThreshold) {
  detail::require_dim(jet, 4, "first_order_system_residual");
  const std::string f_order[3] = {"x", "y", "phi"};
  const std::string g_order[3] = {"z", "w", "phi"};
  const double f_point[3] = {jet.x[0], jet.x[1], jet.phi};
  const double g_point[3] = {jet.x[2], jet.x[3], jet.phi};
  const Jet2 fj = jet_eval(f, f_point, f_order);
  const Jet2 gj = jet_eval(g, g_point, g_order);
  const double f_x = fj.grad(0), f_y = fj.grad(1);
  const double g_z = gj.grad(0), g_w = gj.grad(1);
  if (!(std::abs(f_y) > singular_threshold)) throw Error(ErrorKind::singular_point, "F_y vanishes");
  if (!(std::abs(g_w) > singular_threshold)) throw Error(ErrorKind::singular_point, "G_w vanishes");
  const double v = f_x / f_y;
  const double u = g_z / g_w;
  // phi-derivatives of the quotients at fixed (x, y) and (z, w)
  const double v_phi = (fj.hess(0, 2) * f_y - f_x * fj.hess(1, 2)) / (f_y * f_y);
  const double u_phi = (gj.hess(0, 2) * g_w - g_z * gj.hess(1, 2)) / (g_w * g_w);
  const auto& gr = jet.grad;
  return detail::assemble_first_order(jet, u, v, u_phi * gr[0], u_phi * gr[1], v_phi * gr[2], v_phi * gr[3]);
}

/// First-order form for an explicit field: v = phi_x/phi_y, u = phi_z/phi_w.
/// Residuals are returned with denominators cleared (multiplied by
/// phi_w^2 phi_y, phi_y^2 phi_w, phi_y, phi_w) so the scale counts the
/// second-derivative terms that cancel. The last two vanish by construction.
inline FirstOrderResiduals first_order_system_residual(const FieldJet& jet,
                                                       double singular_threshold = kDefaultSingularThreshold) {
  detail::require_dim(jet, 4, "first_order_system_residual");
  enum { x, y, z, w };
  const auto& g = jet.grad;
  const auto& h = jet.hess;
  if (!(std::abs(g[y]) > singular_threshold)) throw Error(ErrorKind::singular_point, "phi_y vanishes");
  if (!(std::abs(g[w]) > singular_threshold)) throw Error(ErrorKind::singular_point, "phi_w vanishes");
  FirstOrderResiduals out;
  out.v = g[x] / g[y];
  out.u = g[z] / g[w];
  TermSum r0, r1, r2, r3;
  r0 += g[y] * h(x, z) * g[w];
  r0 -= g[y] * g[z] * h(x, w);
  r0 -= g[x] * h(y, z) * g[w];
  r0 += g[x] * g[z] * h(y, w);
  r1 += g[w] * h(x, z) * g[y];
  r1 -= g[w] * g[x] * h(y, z);
  r1 -= g[z] * h(x, w) * g[y];
  r1 += g[z] * g[x] * h(y, w);
  r2 += g[x] * g[y];
  r2 -= g[x] * g[y];
  r3 += g[z] * g[w];
  r3 -= g[z] * g[w];
  out.residuals = {r0.result(), r1.result(), r2.result(), r3.result()};
  return out;
}

}  // namespace implicit_pde
