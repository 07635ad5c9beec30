#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ethcluster/preprocess.hpp"
#include "ethcluster/types.hpp"

namespace ethcluster {

using Lines = std::span<const std::string>;

// `call` opens a sliding buffer; a `balance`/`balances` line seen while the
// buffer is open flags the contract. The buffer holds at most five lines
// after eviction and is reset by every later `call` line.
int detect_reentrancy(Lines lines);

// Bare `now` or `block.timestamp`.
int detect_timestamp(Lines lines);

// A line-leading `require(` / `if(` guard comparing tx.origin with == or !=
// against an identifier.
int detect_tx_origin(Lines lines);

// A `.call(`, `.send(`, ... site on a line that has no
// require/if/bool/success on it.
int detect_unchecked_call(Lines lines);

int detect(VulnerabilityKind kind, Lines lines);

struct KindFlags {
  VulnerabilityKind kind;
  std::vector<std::uint8_t> flags;  // corpus order
};

// Throws Error(InvalidKind) for access_control.
KindFlags scan_corpus(std::span<const TokenDoc> docs, VulnerabilityKind kind);

}  // namespace ethcluster
