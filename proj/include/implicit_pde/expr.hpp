// SPDX-License-Identifier: MIT
#pragma once

#include <charconv>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>

namespace implicit_pde {

enum class NodeKind { constant, variable, unary, binary, power };
enum class UnaryOp { neg, sin, cos, exp, log, sqrt };
enum class BinaryOp { add, sub, mul, div };

constexpr std::string_view to_string(UnaryOp op) {
  switch (op) {
    case UnaryOp::neg: return "-";
    case UnaryOp::sin: return "sin";
    case UnaryOp::cos: return "cos";
    case UnaryOp::exp: return "exp";
    case UnaryOp::log: return "log";
    case UnaryOp::sqrt: return "sqrt";
  }
  return "?";
}

constexpr char to_char(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return '+';
    case BinaryOp::sub: return '-';
    case BinaryOp::mul: return '*';
    case BinaryOp::div: return '/';
  }
  return '?';
}

/// Immutable scalar expression tree over named variables.
///
/// Nodes are shared; copying an Expr is cheap and never copies the tree. The
/// default-constructed Expr is the constant 0.
class Expr {
 public:
  Expr() : Expr(constant(0.0)) {}

  static Expr constant(double value) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::constant;
    n->value = value;
    return Expr(std::move(n));
  }

  static Expr variable(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::variable;
    n->name = std::move(name);
    return Expr(std::move(n));
  }

  static Expr unary(UnaryOp op, Expr arg) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::unary;
    n->unary_op = op;
    n->lhs = std::move(arg.node_);
    return Expr(std::move(n));
  }

  static Expr binary(BinaryOp op, Expr lhs, Expr rhs) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::binary;
    n->binary_op = op;
    n->lhs = std::move(lhs.node_);
    n->rhs = std::move(rhs.node_);
    return Expr(std::move(n));
  }

  static Expr power(Expr base, Expr exponent) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::power;
    n->lhs = std::move(base.node_);
    n->rhs = std::move(exponent.node_);
    return Expr(std::move(n));
  }

  NodeKind kind() const { return node_->kind; }
  double value() const { return node_->value; }
  const std::string& name() const { return node_->name; }
  UnaryOp unary_op() const { return node_->unary_op; }
  BinaryOp binary_op() const { return node_->binary_op; }

  /// First child: operand of unary, lhs of binary, base of power.
  Expr lhs() const { return Expr(node_->lhs); }
  /// Second child: rhs of binary, exponent of power.
  Expr rhs() const { return Expr(node_->rhs); }

  bool is_constant() const { return kind() == NodeKind::constant; }
  bool is_constant(double v) const { return is_constant() && value() == v; }

  friend bool operator==(const Expr& a, const Expr& b) { return structurally_equal(*a.node_, *b.node_); }

 private:
  struct Node {
    NodeKind kind = NodeKind::constant;
    double value = 0.0;
    std::string name;
    UnaryOp unary_op = UnaryOp::neg;
    BinaryOp binary_op = BinaryOp::add;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };

  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static bool structurally_equal(const Node& a, const Node& b) {
    if (&a == &b) return true;
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case NodeKind::constant:
        // bitwise comparison so that -0 and 0 are distinct trees
        return std::signbit(a.value) == std::signbit(b.value) && a.value == b.value;
      case NodeKind::variable: return a.name == b.name;
      case NodeKind::unary: return a.unary_op == b.unary_op && structurally_equal(*a.lhs, *b.lhs);
      case NodeKind::binary:
        return a.binary_op == b.binary_op && structurally_equal(*a.lhs, *b.lhs) &&
               structurally_equal(*a.rhs, *b.rhs);
      case NodeKind::power: return structurally_equal(*a.lhs, *b.lhs) && structurally_equal(*a.rhs, *b.rhs);
    }
    return false;
  }

  std::shared_ptr<const Node> node_;
};

/// Variable bindings for evaluation. Transparent comparator so lookups by
/// string_view do not allocate.
using Bindings = std::map<std::string, double, std::less<>>;

inline void collect_free_vars(const Expr& e, std::set<std::string>& out) {
  switch (e.kind()) {
    case NodeKind::constant: return;
    case NodeKind::variable: out.insert(e.name()); return;
    case NodeKind::unary: collect_free_vars(e.lhs(), out); return;
    case NodeKind::binary:
    case NodeKind::power:
      collect_free_vars(e.lhs(), out);
      collect_free_vars(e.rhs(), out);
      return;
  }
}

inline std::set<std::string> free_vars(const Expr& e) {
  std::set<std::string> out;
  collect_free_vars(e, out);
  return out;
}

inline bool depends_on(const Expr& e, std::string_view var) {
  switch (e.kind()) {
    case NodeKind::constant: return false;
    case NodeKind::variable: return e.name() == var;
    case NodeKind::unary: return depends_on(e.lhs(), var);
    case NodeKind::binary:
    case NodeKind::power: return depends_on(e.lhs(), var) || depends_on(e.rhs(), var);
  }
  return false;
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

/// Fully parenthesized text form. Re-parsing the output yields a tree that
/// compares equal to the input.
inline std::string print(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::constant: {
      const double v = e.value();
      if (std::signbit(v)) return "(-" + format_number(-v) + ")";
      return format_number(v);
    }
    case NodeKind::variable: return e.name();
    case NodeKind::unary: {
      if (e.unary_op() == UnaryOp::neg) {
        const Expr arg = e.lhs();
        // a bare literal after '-' would be folded into a negative constant
        if (arg.is_constant() && !std::signbit(arg.value())) return "(-(" + print(arg) + "))";
        return "(-" + print(arg) + ")";
      }
      return std::string(to_string(e.unary_op())) + "(" + print(e.lhs()) + ")";
    }
    case NodeKind::binary:
      return "(" + print(e.lhs()) + to_char(e.binary_op()) + print(e.rhs()) + ")";
    case NodeKind::power: return "(" + print(e.lhs()) + "^" + print(e.rhs()) + ")";
  }
  return {};
}

/// Replace every occurrence of the named variables by the given expressions.
inline Expr substitute(const Expr& e, const std::map<std::string, Expr, std::less<>>& replacements) {
  switch (e.kind()) {
    case NodeKind::constant: return e;
    case NodeKind::variable: {
      auto it = replacements.find(e.name());
      return it == replacements.end() ? e : it->second;
    }
    case NodeKind::unary: return Expr::unary(e.unary_op(), substitute(e.lhs(), replacements));
    case NodeKind::binary:
      return Expr::binary(e.binary_op(), substitute(e.lhs(), replacements), substitute(e.rhs(), replacements));
    case NodeKind::power: return Expr::power(substitute(e.lhs(), replacements), substitute(e.rhs(), replacements));
  }
  return e;
}

inline Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::add, a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::sub, a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::mul, a, b); }
inline Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::div, a, b); }
inline Expr operator-(const Expr& a) { return Expr::unary(UnaryOp::neg, a); }

}  // namespace implicit_pde
