// SPDX-License-Identifier: MIT
#pragma once

#include <implicit_pde/errors.hpp>
#include <implicit_pde/eval.hpp>
#include <implicit_pde/expr.hpp>
#include <implicit_pde/linalg.hpp>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace implicit_pde {

/// Second-order truncated Taylor object over m directions: value, gradient,
/// and symmetric Hessian. Dense storage; m stays small (at most a handful of
/// coordinates plus the field).
class Jet2 {
 public:
  Jet2() = default;

  /// Constant jet: zero gradient and Hessian.
  Jet2(double value, std::size_t m) : value_(value), grad_(m, 0.0), hess_(m) {}

  /// Seed jet for direction i: value point[i], gradient e_i, Hessian 0.
  static Jet2 lift(std::span<const double> point, std::size_t i) {
    if (i >= point.size())
      throw Error(ErrorKind::index_out_of_range,
                  "direction " + std::to_string(i) + " out of range for m=" + std::to_string(point.size()));
    Jet2 j(point[i], point.size());
    j.grad_[i] = 1.0;
    return j;
  }

  std::size_t dim() const { return grad_.size(); }
  double value() const { return value_; }
  const std::vector<double>& grad() const { return grad_; }
  double grad(std::size_t i) const { return grad_[i]; }
  const SymMatrix& hess() const { return hess_; }
  double hess(std::size_t i, std::size_t j) const { return hess_(i, j); }

  /// g(a) for a scalar function with known g, g', g''.
  friend Jet2 compose(const Jet2& a, double g, double dg, double d2g) {
    Jet2 r(g, a.dim());
    const std::size_t m = a.dim();
    for (std::size_t i = 0; i < m; ++i) r.grad_[i] = dg * a.grad_[i];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i; j < m; ++j) r.hess_(i, j) = dg * a.hess_(i, j) + d2g * a.grad_[i] * a.grad_[j];
    return r;
  }

  friend Jet2 operator+(const Jet2& a, const Jet2& b) {
    Jet2 r(a.value_ + b.value_, a.dim());
    for (std::size_t i = 0; i < r.grad_.size(); ++i) r.grad_[i] = a.grad_[i] + b.grad_[i];
    for (std::size_t k = 0; k < r.hess_.packed().size(); ++k)
      r.hess_.packed()[k] = a.hess_.packed()[k] + b.hess_.packed()[k];
    return r;
  }

  friend Jet2 operator-(const Jet2& a, const Jet2& b) {
    Jet2 r(a.value_ - b.value_, a.dim());
    for (std::size_t i = 0; i < r.grad_.size(); ++i) r.grad_[i] = a.grad_[i] - b.grad_[i];
    for (std::size_t k = 0; k < r.hess_.packed().size(); ++k)
      r.hess_.packed()[k] = a.hess_.packed()[k] - b.hess_.packed()[k];
    return r;
  }

  friend Jet2 operator*(const Jet2& a, const Jet2& b) {
    Jet2 r(a.value_ * b.value_, a.dim());
    const std::size_t m = a.dim();
    for (std::size_t i = 0; i < m; ++i) r.grad_[i] = a.value_ * b.grad_[i] + b.value_ * a.grad_[i];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i; j < m; ++j)
        r.hess_(i, j) = a.value_ * b.hess_(i, j) + b.value_ * a.hess_(i, j) + a.grad_[i] * b.grad_[j] +
                        b.grad_[i] * a.grad_[j];
    return r;
  }

  friend Jet2 operator/(const Jet2& a, const Jet2& b) {
    if (b.value_ == 0.0) throw Error(ErrorKind::domain, "division by zero");
    const double v = b.value_;
    return a * compose(b, 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
  }

  bool all_finite() const {
    if (!std::isfinite(value_)) return false;
    for (double g : grad_)
      if (!std::isfinite(g)) return false;
    for (double h : hess_.packed())
      if (!std::isfinite(h)) return false;
    return true;
  }

 private:
  double value_ = 0.0;
  std::vector<double> grad_;
  SymMatrix hess_;
};

namespace detail {

inline Jet2 checked_jet(Jet2 j, const char* what) {
  if (!j.all_finite()) throw Error(ErrorKind::non_finite, std::string("non-finite jet in ") + what);
  return j;
}

inline Jet2 jet_pow_const(const Jet2& a, double c) {
  const double x = a.value();
  check_pow_domain(x, c);
  if (x == 0.0 && c < 2.0 && !(is_integer(c) && c >= 0.0))
    throw Error(ErrorKind::domain, "power not twice differentiable at zero base");
  const double f = std::pow(x, c);
  const double d1 = c == 0.0 ? 0.0 : c * std::pow(x, c - 1.0);
  const double d2 = (c == 0.0 || c == 1.0) ? 0.0 : c * (c - 1.0) * std::pow(x, c - 2.0);
  return compose(a, f, d1, d2);
}

struct JetContext {
  std::span<const double> point;
  std::span<const std::string> order;
  const Bindings* fixed;
};

inline Jet2 jet_eval_node(const Expr& e, const JetContext& ctx) {
  const std::size_t m = ctx.point.size();
  switch (e.kind()) {
    case NodeKind::constant: return Jet2(e.value(), m);
    case NodeKind::variable: {
      for (std::size_t i = 0; i < ctx.order.size(); ++i)
        if (ctx.order[i] == e.name()) return Jet2::lift(ctx.point, i);
      if (ctx.fixed) {
        auto it = ctx.fixed->find(e.name());
        if (it != ctx.fixed->end()) return Jet2(it->second, m);
      }
      throw Error(ErrorKind::unbound_variable, "variable '" + e.name() + "' is not bound");
    }
    case NodeKind::unary: {
      const Jet2 a = jet_eval_node(e.lhs(), ctx);
      const UnaryRule& rule = unary_rule(e.unary_op());
      const double x = a.value();
      if (!rule.in_domain(x)) throw Error(ErrorKind::domain, rule.domain_message);
      if (e.unary_op() == UnaryOp::sqrt && x == 0.0) throw Error(ErrorKind::domain, "sqrt not differentiable at 0");
      return checked_jet(compose(a, rule.f(x), rule.d1(x), rule.d2(x)), "unary function");
    }
    case NodeKind::binary: {
      const Jet2 a = jet_eval_node(e.lhs(), ctx);
      const Jet2 b = jet_eval_node(e.rhs(), ctx);
      switch (e.binary_op()) {
        case BinaryOp::add: return checked_jet(a + b, "addition");
        case BinaryOp::sub: return checked_jet(a - b, "subtraction");
        case BinaryOp::mul: return checked_jet(a * b, "multiplication");
        case BinaryOp::div: return checked_jet(a / b, "division");
      }
      break;
    }
    case NodeKind::power: {
      const Jet2 base = jet_eval_node(e.lhs(), ctx);
      bool constant_exponent = true;
      for (const auto& name : ctx.order)
        if (depends_on(e.rhs(), name)) constant_exponent = false;
      if (constant_exponent) {
        const double c = jet_eval_node(e.rhs(), ctx).value();
        return checked_jet(jet_pow_const(base, c), "power");
      }
      const Jet2 exponent = jet_eval_node(e.rhs(), ctx);
      const double x = base.value();
      if (!(x > 0.0)) throw Error(ErrorKind::domain, "variable exponent requires a positive base");
      const Jet2 log_base = compose(base, std::log(x), 1.0 / x, -1.0 / (x * x));
      const Jet2 product = exponent * log_base;
      const double ev = std::exp(product.value());
      return checked_jet(compose(product, ev, ev, ev), "power");
    }
  }
  return Jet2(0.0, m);
}

}  // namespace detail

/// Evaluate e as a second-order jet. Variables listed in order are the
/// differentiation directions, seeded at point; any other free variable must
/// appear in fixed and is treated as a constant.
inline Jet2 jet_eval(const Expr& e, std::span<const double> point, std::span<const std::string> order,
                     const Bindings& fixed = {}) {
  if (point.size() != order.size())
    throw Error(ErrorKind::dimension_mismatch, "point has " + std::to_string(point.size()) + " entries but " +
                                                   std::to_string(order.size()) + " variables were named");
  return detail::jet_eval_node(e, detail::JetContext{point, order, &fixed});
}

}  // namespace implicit_pde
