#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace ethcluster {

enum class Label { clean, vulnerable };

enum class VulnerabilityKind {
  reentrancy,
  access_control,
  timestamp,
  tx_origin,
  unchecked_call,
};

inline constexpr std::array<VulnerabilityKind, 5> kAllKinds = {
    VulnerabilityKind::reentrancy, VulnerabilityKind::access_control,
    VulnerabilityKind::timestamp, VulnerabilityKind::tx_origin,
    VulnerabilityKind::unchecked_call};

std::string_view to_string(Label label) noexcept;
std::optional<Label> parse_label(std::string_view text) noexcept;

std::string_view to_string(VulnerabilityKind kind) noexcept;
// Accepts the canonical snake_case names; throws Error(InvalidKind) otherwise.
VulnerabilityKind parse_kind(std::string_view text);

// Kinds that have a regular-expression signature. Access control is
// detected by clustering alone.
constexpr bool has_pattern(VulnerabilityKind kind) noexcept {
  return kind != VulnerabilityKind::access_control;
}

}  // namespace ethcluster
