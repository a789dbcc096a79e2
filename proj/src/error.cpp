#include "floatnorm/error.hpp"

namespace floatnorm {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid_input";
    case ErrorKind::kDomain: return "domain_error";
    case ErrorKind::kParse: return "parse_error";
    case ErrorKind::kVersion: return "version_mismatch";
    case ErrorKind::kTraining: return "training_failure";
    case ErrorKind::kNotFound: return "not_found";
    case ErrorKind::kUnavailable: return "unavailable";
  }
  return "unknown";
}

namespace {

std::string decorate(const std::string& message, const std::optional<std::size_t>& line) {
  if (!line) return message;
  return "line " + std::to_string(*line) + ": " + message;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message, std::optional<std::string> parameter,
             std::optional<std::size_t> line)
    : std::runtime_error(decorate(message, line)),
      kind_(kind),
      parameter_(std::move(parameter)),
      line_(line) {}

}  // namespace floatnorm
