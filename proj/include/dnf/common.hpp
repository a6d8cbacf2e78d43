#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dnf {

inline constexpr std::string_view kVersion = "0.1.0";

enum class ErrorCode {
  InvalidArgument,
  ParseFailure,
  NoIdentifier,
  InsufficientMatches,
  MissingProvenance,
  CorpusExhausted,
  QCFailure,
  FormatError,
  NoValidOutcomes,
  EmptyText,
  ScorerError,
  ShapeMismatch,
  MissingTensor,
  IoError,
  BindError,
};

std::string_view to_string(ErrorCode code);

// Every failure the library reports surfaces as this exception; `code()`
// distinguishes the contract-level error kinds.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dnf
