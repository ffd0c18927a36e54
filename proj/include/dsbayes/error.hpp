#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dsbayes {

/// Fine-grained error kinds raised by the library.
enum class ErrorKind {
  kInvalidParameter,
  kShape,
  kNumeric,
  kConfig,
  kLookup,
  kParse,
  kMerge,
  kValidation,
  kUnsupportedArity,
  kIo,
  kNetwork,
  kAuthentication,
};

/// Coarse classes used for process exit codes.
enum class ErrorClass { kConfig = 2, kData = 3, kNumeric = 4, kNetwork = 5 };

std::string_view to_string(ErrorKind kind);
ErrorClass error_class(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  ErrorClass error_class() const noexcept { return dsbayes::error_class(kind_); }

 private:
  ErrorKind kind_;
};

/// Parse failure that keeps the offending input for auditing.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::string raw, std::size_t line = 0);

  const std::string& raw() const noexcept { return raw_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string raw_;
  std::size_t line_;
};

}  // namespace dsbayes
