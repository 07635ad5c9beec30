#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ethcluster {

enum class ErrorCode {
  InvalidInput,
  TransportError,
  NotVerified,
  RateLimited,
  StoreError,
  InsufficientData,
  InvalidKind,
  EmptyVocab,
  FormatError,
  VersionError,
  EmptyCorpus,
  InvalidComponents,
  DimError,
  TooManyClusters,
  AlignmentError,
  EmptyEvaluation,
  PathError,
  ModelNotFound,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above. The
// pipeline driver additionally tags the stage that was running.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Error(ErrorCode code, std::string stage, const std::string& message)
      : std::runtime_error(message), code_(code), stage_(std::move(stage)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  ErrorCode code_;
  std::string stage_;
};

}  // namespace ethcluster
