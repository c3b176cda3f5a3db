// SPDX-License-Identifier: MIT
#pragma once

#include <implicit_pde/errors.hpp>
#include <implicit_pde/expr.hpp>

#include <cmath>
#include <string>

namespace implicit_pde {

/// Value and first two derivatives of a unary function, registered per op.
/// eval uses only f; the jet engine uses all three.
struct UnaryRule {
  double (*f)(double);
  double (*d1)(double);
  double (*d2)(double);
  bool (*in_domain)(double);
  const char* domain_message;
};

inline const UnaryRule& unary_rule(UnaryOp op) {
  static const UnaryRule neg{[](double x) { return -x; }, [](double) { return -1.0; }, [](double) { return 0.0; },
                             [](double) { return true; }, ""};
  static const UnaryRule sin{[](double x) { return std::sin(x); }, [](double x) { return std::cos(x); },
                             [](double x) { return -std::sin(x); }, [](double) { return true; }, ""};
  static const UnaryRule cos{[](double x) { return std::cos(x); }, [](double x) { return -std::sin(x); },
                             [](double x) { return -std::cos(x); }, [](double) { return true; }, ""};
  static const UnaryRule exp{[](double x) { return std::exp(x); }, [](double x) { return std::exp(x); },
                             [](double x) { return std::exp(x); }, [](double) { return true; }, ""};
  static const UnaryRule log{[](double x) { return std::log(x); }, [](double x) { return 1.0 / x; },
                             [](double x) { return -1.0 / (x * x); }, [](double x) { return x > 0.0; },
                             "log of nonpositive argument"};
  static const UnaryRule sqrt{[](double x) { return std::sqrt(x); }, [](double x) { return 0.5 / std::sqrt(x); },
                              [](double x) { return -0.25 / (x * std::sqrt(x)); }, [](double x) { return x >= 0.0; },
                              "sqrt of negative argument"};
  switch (op) {
    case UnaryOp::neg: return neg;
    case UnaryOp::sin: return sin;
    case UnaryOp::cos: return cos;
    case UnaryOp::exp: return exp;
    case UnaryOp::log: return log;
    case UnaryOp::sqrt: return sqrt;
  }
  return neg;
}

namespace detail {

inline bool is_integer(double v) { return std::isfinite(v) && std::floor(v) == v; }

inline void check_pow_domain(double base, double exponent) {
  if (base < 0.0 && !is_integer(exponent))
    throw Error(ErrorKind::domain, "negative base " + format_number(base) + " raised to non-integer power");
  if (base == 0.0 && exponent < 0.0) throw Error(ErrorKind::domain, "zero raised to negative power");
}

inline double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorKind::non_finite, std::string("non-finite result in ") + what);
  return v;
}

}  // namespace detail

/// Evaluate e under the given bindings. Domain violations and non-finite
/// intermediate results throw rather than propagate.
inline double eval(const Expr& e, const Bindings& bindings) {
  switch (e.kind()) {
    case NodeKind::constant: return e.value();
    case NodeKind::variable: {
      auto it = bindings.find(e.name());
      if (it == bindings.end()) throw Error(ErrorKind::unbound_variable, "variable '" + e.name() + "' is not bound");
      return it->second;
    }
    case NodeKind::unary: {
      const double a = eval(e.lhs(), bindings);
      const UnaryRule& rule = unary_rule(e.unary_op());
      if (!rule.in_domain(a)) throw Error(ErrorKind::domain, rule.domain_message);
      return detail::checked(rule.f(a), "unary function");
    }
    case NodeKind::binary: {
      const double a = eval(e.lhs(), bindings);
      const double b = eval(e.rhs(), bindings);
      switch (e.binary_op()) {
        case BinaryOp::add: return detail::checked(a + b, "addition");
        case BinaryOp::sub: return detail::checked(a - b, "subtraction");
        case BinaryOp::mul: return detail::checked(a * b, "multiplication");
        case BinaryOp::div:
          if (b == 0.0) throw Error(ErrorKind::domain, "division by zero");
          return detail::checked(a / b, "division");
      }
      break;
    }
    case NodeKind::power: {
      const double a = eval(e.lhs(), bindings);
      const double b = eval(e.rhs(), bindings);
      detail::check_pow_domain(a, b);
      return detail::checked(std::pow(a, b), "power");
    }
  }
  return 0.0;
}

}  // namespace implicit_pde
