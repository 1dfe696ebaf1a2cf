#pragma once

#include <stdexcept>
#include <string>

namespace prefplan {

enum class ErrorKind {
  ParseError,
  MissingTransition,
  UnknownState,
  OverlappingSets,
  UnknownSymbol,
  UnknownApfName,
  LexNotAtRoot,
  LexNotEvaluable,
  InvalidSpec,
  InvalidModel,
  SymbolMismatch,
  ApfTooLong,
  NumericalBreakdown,
  UndefinedDecisionRule,
  InvalidArgument,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a kind so callers (and the CLI)
// can branch on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace prefplan
