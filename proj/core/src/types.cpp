#include "ethcluster/types.hpp"

#include "ethcluster/error.hpp"

namespace ethcluster {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::NotVerified: return "NotVerified";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::StoreError: return "StoreError";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InvalidKind: return "InvalidKind";
    case ErrorCode::EmptyVocab: return "EmptyVocab";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::VersionError: return "VersionError";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::InvalidComponents: return "InvalidComponents";
    case ErrorCode::DimError: return "DimError";
    case ErrorCode::TooManyClusters: return "TooManyClusters";
    case ErrorCode::AlignmentError: return "AlignmentError";
    case ErrorCode::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::PathError: return "PathError";
    case ErrorCode::ModelNotFound: return "ModelNotFound";
  }
  return "Unknown";
}

std::string_view to_string(Label label) noexcept {
  return label == Label::vulnerable ? "vulnerable" : "clean";
}

std::optional<Label> parse_label(std::string_view text) noexcept {
  if (text == "vulnerable") return Label::vulnerable;
  if (text == "clean") return Label::clean;
  return std::nullopt;
}

std::string_view to_string(VulnerabilityKind kind) noexcept {
  switch (kind) {
    case VulnerabilityKind::reentrancy: return "reentrancy";
    case VulnerabilityKind::access_control: return "access_control";
    case VulnerabilityKind::timestamp: return "timestamp";
    case VulnerabilityKind::tx_origin: return "tx_origin";
    case VulnerabilityKind::unchecked_call: return "unchecked_call";
  }
  return "unknown";
}

VulnerabilityKind parse_kind(std::string_view text) {
  for (auto kind : kAllKinds) {
    if (to_string(kind) == text) return kind;
  }
  throw Error(ErrorCode::InvalidKind,
              "unknown vulnerability kind '" + std::string(text) + "'");
}

}  // namespace ethcluster
