// SPDX-License-Identifier: MIT
#pragma once

#include <implicit_pde/errors.hpp>
#include <implicit_pde/expr.hpp>

#include <array>
#include <cctype>
#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace implicit_pde {

// Grammar:
//   expr     := term (('+'|'-') term)*
//   term     := factor (('*'|'/') factor)*
//   factor   := base ('^' factor)?
//   base     := number | ident | ident '(' expr ')' | '(' expr ')' | '-' factor
//
// '-' directly in front of a numeric literal (not followed by '^') produces a
// negative constant rather than a negation node.

namespace detail {

inline constexpr std::array<std::pair<std::string_view, UnaryOp>, 5> kFunctions{{
    {"sin", UnaryOp::sin},
    {"cos", UnaryOp::cos},
    {"exp", UnaryOp::exp},
    {"log", UnaryOp::log},
    {"sqrt", UnaryOp::sqrt},
}};

inline std::optional<UnaryOp> lookup_function(std::string_view name) {
  for (auto [n, op] : kFunctions)
    if (n == name) return op;
  return std::nullopt;
}

enum class TokenKind { number, ident, plus, minus, star, slash, caret, lparen, rparen, end };

struct Token {
  TokenKind kind = TokenKind::end;
  std::size_t offset = 0;
  std::string_view text;
  double number = 0.0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    Token tok;
    tok.offset = pos_;
    if (pos_ == src_.size()) return tok;

    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return lex_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = pos_ + 1;
      while (end < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_')) ++end;
      tok.kind = TokenKind::ident;
      tok.text = src_.substr(pos_, end - pos_);
      pos_ = end;
      return tok;
    }
    switch (c) {
      case '+': tok.kind = TokenKind::plus; break;
      case '-': tok.kind = TokenKind::minus; break;
      case '*': tok.kind = TokenKind::star; break;
      case '/': tok.kind = TokenKind::slash; break;
      case '^': tok.kind = TokenKind::caret; break;
      case '(': tok.kind = TokenKind::lparen; break;
      case ')': tok.kind = TokenKind::rparen; break;
      default: throw SyntaxError(ErrorKind::syntax, pos_, std::string("unexpected character '") + c + "'");
    }
    tok.text = src_.substr(pos_, 1);
    ++pos_;
    return tok;
  }

 private:
  Token lex_number() {
    Token tok;
    tok.offset = pos_;
    std::size_t end = pos_;
    auto digits = [&] {
      while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
    };
    digits();
    if (end < src_.size() && src_[end] == '.') {
      ++end;
      digits();
    }
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t exp = end + 1;
      if (exp < src_.size() && (src_[exp] == '+' || src_[exp] == '-')) ++exp;
      if (exp < src_.size() && std::isdigit(static_cast<unsigned char>(src_[exp]))) {
        end = exp;
        digits();
      }
    }
    const std::string_view text = src_.substr(pos_, end - pos_);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), tok.number);
    if (ec != std::errc() || ptr != text.data() + text.size())
      throw SyntaxError(ErrorKind::syntax, pos_, "malformed number '" + std::string(text) + "'");
    tok.kind = TokenKind::number;
    tok.text = text;
    pos_ = end;
    return tok;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lexer_(src) {
    current_ = lexer_.next();
    lookahead_ = lexer_.next();
  }

  Expr parse_all() {
    Expr e = parse_expr();
    if (current_.kind != TokenKind::end) fail("unexpected '" + std::string(current_.text) + "'");
    return e;
  }

 private:
  void advance() {
    current_ = lookahead_;
    if (lookahead_.kind != TokenKind::end) lookahead_ = lexer_.next();
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw SyntaxError(ErrorKind::syntax, current_.offset, message);
  }

  void expect(TokenKind kind, std::string_view what) {
    if (current_.kind != kind) {
      if (current_.kind == TokenKind::end) fail("expected " + std::string(what) + " before end of input");
      fail("expected " + std::string(what) + ", found '" + std::string(current_.text) + "'");
    }
    advance();
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    while (current_.kind == TokenKind::plus || current_.kind == TokenKind::minus) {
      const BinaryOp op = current_.kind == TokenKind::plus ? BinaryOp::add : BinaryOp::sub;
      advance();
      lhs = Expr::binary(op, lhs, parse_term());
    }
    return lhs;
  }

  Expr parse_term() {
    Expr lhs = parse_factor();
    while (current_.kind == TokenKind::star || current_.kind == TokenKind::slash) {
      const BinaryOp op = current_.kind == TokenKind::star ? BinaryOp::mul : BinaryOp::div;
      advance();
      lhs = Expr::binary(op, lhs, parse_factor());
    }
    return lhs;
  }

  Expr parse_factor() {
    Expr base = parse_base();
    if (current_.kind == TokenKind::caret) {
      advance();
      return Expr::power(base, parse_factor());
    }
    return base;
  }

  Expr parse_base() {
    switch (current_.kind) {
      case TokenKind::number: {
        const double v = current_.number;
        advance();
        return Expr::constant(v);
      }
      case TokenKind::ident: {
        const Token ident = current_;
        advance();
        if (current_.kind != TokenKind::lparen) return Expr::variable(std::string(ident.text));
        const auto op = lookup_function(ident.text);
        if (!op)
          throw SyntaxError(ErrorKind::unknown_function, ident.offset,
                            "unknown function '" + std::string(ident.text) + "'");
        advance();
        Expr arg = parse_expr();
        expect(TokenKind::rparen, "')'");
        return Expr::unary(*op, arg);
      }
      case TokenKind::lparen: {
        advance();
        Expr inner = parse_expr();
        expect(TokenKind::rparen, "')'");
        return inner;
      }
      case TokenKind::minus: {
        advance();
        if (current_.kind == TokenKind::number && lookahead_.kind != TokenKind::caret) {
          const double v = current_.number;
          advance();
          return Expr::constant(-v);
        }
        return Expr::unary(UnaryOp::neg, parse_factor());
      }
      case TokenKind::end: fail("unexpected end of input");
      default: fail("unexpected '" + std::string(current_.text) + "'");
    }
  }

  Lexer lexer_;
  Token current_;
  Token lookahead_;
};

}  // namespace detail

/// Parse DSL text into an expression tree. Throws SyntaxError carrying the byte
/// offset of the offending token.
inline Expr parse(std::string_view text) { return detail::Parser(text).parse_all(); }

}  // namespace implicit_pde
