#include "dsbayes/error.hpp"

namespace dsbayes {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidParameter: return "invalid-parameter";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kLookup: return "lookup";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kMerge: return "merge";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kUnsupportedArity: return "unsupported-arity";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kNetwork: return "network";
    case ErrorKind::kAuthentication: return "authentication";
  }
  return "unknown";
}

ErrorClass error_class(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kUnsupportedArity:
      return ErrorClass::kConfig;
    case ErrorKind::kInvalidParameter:
    case ErrorKind::kNumeric:
      return ErrorClass::kNumeric;
    case ErrorKind::kNetwork:
    case ErrorKind::kAuthentication:
      return ErrorClass::kNetwork;
    default:
      return ErrorClass::kData;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

ParseError::ParseError(const std::string& message, std::string raw, std::size_t line)
    : Error(ErrorKind::kParse,
            line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      raw_(std::move(raw)),
      line_(line) {}

}  // namespace dsbayes
