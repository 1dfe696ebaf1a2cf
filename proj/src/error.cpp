#include "prefplan/error.hpp"

namespace prefplan {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MissingTransition: return "MissingTransition";
    case ErrorKind::UnknownState: return "UnknownState";
    case ErrorKind::OverlappingSets: return "OverlappingSets";
    case ErrorKind::UnknownSymbol: return "UnknownSymbol";
    case ErrorKind::UnknownApfName: return "UnknownApfName";
    case ErrorKind::LexNotAtRoot: return "LexNotAtRoot";
    case ErrorKind::LexNotEvaluable: return "LexNotEvaluable";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::SymbolMismatch: return "SymbolMismatch";
    case ErrorKind::ApfTooLong: return "ApfTooLong";
    case ErrorKind::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorKind::UndefinedDecisionRule: return "UndefinedDecisionRule";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace prefplan
