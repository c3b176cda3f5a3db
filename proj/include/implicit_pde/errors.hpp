// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace implicit_pde {

enum class ErrorKind {
  syntax,
  unknown_function,
  unbound_variable,
  domain,
  non_finite,
  index_out_of_range,
  dimension_mismatch,
  no_root,
  singular_point,
  zero_derivative,
  rank_deficient_system,
  gate_not_satisfied,
  empty_level_set,
  arity_mismatch,
  config,
  solver_coverage,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::syntax: return "SyntaxError";
    case ErrorKind::unknown_function: return "UnknownFunction";
    case ErrorKind::unbound_variable: return "UnboundVariable";
    case ErrorKind::domain: return "DomainError";
    case ErrorKind::non_finite: return "NonFinite";
    case ErrorKind::index_out_of_range: return "IndexOutOfRange";
    case ErrorKind::dimension_mismatch: return "DimensionMismatch";
    case ErrorKind::no_root: return "NoRoot";
    case ErrorKind::singular_point: return "SingularPoint";
    case ErrorKind::zero_derivative: return "ZeroDerivative";
    case ErrorKind::rank_deficient_system: return "RankDeficientSystem";
    case ErrorKind::gate_not_satisfied: return "GateNotSatisfied";
    case ErrorKind::empty_level_set: return "EmptyLevelSet";
    case ErrorKind::arity_mismatch: return "ArityMismatch";
    case ErrorKind::config: return "ConfigError";
    case ErrorKind::solver_coverage: return "SolverCoverage";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (the grid
/// sampler, the CLI) can record or map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failure in the expression DSL; offset is a byte offset into the input.
class SyntaxError : public Error {
 public:
  SyntaxError(ErrorKind kind, std::size_t offset, const std::string& message)
      : Error(kind, message + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Scenario-file failure. line is 1-based; field names the offending key when known.
class ConfigError : public Error {
 public:
  ConfigError(std::optional<std::size_t> line, std::string field, const std::string& message)
      : Error(ErrorKind::config, format(line, field, message)), line_(line), field_(std::move(field)) {}

  std::optional<std::size_t> line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(std::optional<std::size_t> line, const std::string& field,
                            const std::string& message) {
    std::string out;
    if (line) out += "line " + std::to_string(*line) + ": ";
    if (!field.empty()) out += "field '" + field + "': ";
    return out + message;
  }

  std::optional<std::size_t> line_;
  std::string field_;
};

}  // namespace implicit_pde
