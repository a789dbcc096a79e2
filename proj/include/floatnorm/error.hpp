#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace floatnorm {

/// Coarse classification used by the CLI exit codes and the HTTP status map.
enum class ErrorKind {
  kInvalidInput,  // caller supplied something outside the contract
  kDomain,        // numerics left their valid domain
  kParse,         // malformed file or payload
  kVersion,       // schema/format version mismatch
  kTraining,      // training diverged or was misconfigured
  kNotFound,
  kUnavailable,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::string> parameter = std::nullopt,
        std::optional<std::size_t> line = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  /// Name of the offending parameter, when the error is about one.
  const std::optional<std::string>& parameter() const noexcept { return parameter_; }
  /// 1-based line number for parse errors.
  const std::optional<std::size_t>& line() const noexcept { return line_; }

 private:
  ErrorKind kind_;
  std::optional<std::string> parameter_;
  std::optional<std::size_t> line_;
};

inline Error invalid_input(const std::string& message,
                           std::optional<std::string> parameter = std::nullopt) {
  return Error(ErrorKind::kInvalidInput, message, std::move(parameter));
}

inline Error parse_error(const std::string& message, std::optional<std::size_t> line = std::nullopt) {
  return Error(ErrorKind::kParse, message, std::nullopt, line);
}

}  // namespace floatnorm
