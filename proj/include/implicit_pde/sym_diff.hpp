// SPDX-License-Identifier: MIT
#pragma once

#include <implicit_pde/expr.hpp>

#include <cmath>
#include <string_view>

namespace implicit_pde {

// Folding constructors. Each fold performs exactly the floating-point operation
// evaluation would have performed, so folded trees evaluate bit-identically.
namespace fold {

inline bool foldable(double v) { return std::isfinite(v); }

inline Expr add(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant() && foldable(a.value() + b.value())) return Expr::constant(a.value() + b.value());
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return a + b;
}

inline Expr neg(const Expr& a) {
  if (a.is_constant()) return Expr::constant(-a.value());
  if (a.kind() == NodeKind::unary && a.unary_op() == UnaryOp::neg) return a.lhs();
  return -a;
}

inline Expr sub(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant() && foldable(a.value() - b.value())) return Expr::constant(a.value() - b.value());
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return neg(b);
  return a - b;
}

inline Expr mul(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant() && foldable(a.value() * b.value())) return Expr::constant(a.value() * b.value());
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return neg(b);
  if (b.is_constant(-1.0)) return neg(a);
  return a * b;
}

inline Expr div(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant() && b.value() != 0.0 && foldable(a.value() / b.value()))
    return Expr::constant(a.value() / b.value());
  if (a.is_constant(0.0)) return Expr::constant(0.0);
  if (b.is_constant(1.0)) return a;
  return a / b;
}

inline Expr pow(const Expr& a, const Expr& b) {
  if (b.is_constant(1.0)) return a;
  if (b.is_constant(0.0)) return Expr::constant(1.0);
  return Expr::power(a, b);
}

inline Expr apply(UnaryOp op, const Expr& a) {
  if (op == UnaryOp::neg) return neg(a);
  return Expr::unary(op, a);
}

}  // namespace fold

/// Symbolic derivative d e / d var. Expressions free of var differentiate to
/// the constant 0.
inline Expr sym_diff(const Expr& e, std::string_view var) {
  using namespace fold;
  if (!depends_on(e, var)) return Expr::constant(0.0);

  switch (e.kind()) {
    case NodeKind::constant: return Expr::constant(0.0);
    case NodeKind::variable: return Expr::constant(1.0);
    case NodeKind::unary: {
      const Expr a = e.lhs();
      const Expr da = sym_diff(a, var);
      switch (e.unary_op()) {
        case UnaryOp::neg: return neg(da);
        case UnaryOp::sin: return mul(Expr::unary(UnaryOp::cos, a), da);
        case UnaryOp::cos: return mul(neg(Expr::unary(UnaryOp::sin, a)), da);
        case UnaryOp::exp: return mul(e, da);
        case UnaryOp::log: return div(da, a);
        case UnaryOp::sqrt: return div(da, mul(Expr::constant(2.0), e));
      }
      break;
    }
    case NodeKind::binary: {
      const Expr a = e.lhs();
      const Expr b = e.rhs();
      const Expr da = sym_diff(a, var);
      const Expr db = sym_diff(b, var);
      switch (e.binary_op()) {
        case BinaryOp::add: return add(da, db);
        case BinaryOp::sub: return sub(da, db);
        case BinaryOp::mul: return add(mul(da, b), mul(a, db));
        case BinaryOp::div: return div(sub(mul(da, b), mul(a, db)), pow(b, Expr::constant(2.0)));
      }
      break;
    }
    case NodeKind::power: {
      const Expr base = e.lhs();
      const Expr exponent = e.rhs();
      const Expr dbase = sym_diff(base, var);
      if (!depends_on(exponent, var)) {
        // c * base^(c-1) * base'
        return mul(mul(exponent, pow(base, sub(exponent, Expr::constant(1.0)))), dbase);
      }
      // base^exponent * (exponent' * log(base) + exponent * base' / base)
      const Expr dexp = sym_diff(exponent, var);
      return mul(e, add(mul(dexp, Expr::unary(UnaryOp::log, base)), div(mul(exponent, dbase), base)));
    }
  }
  return Expr::constant(0.0);
}

}  // namespace implicit_pde
