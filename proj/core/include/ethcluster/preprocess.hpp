#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ethcluster {

// The 52 reserved Solidity words dropped before embedding and TF-IDF.
std::span<const std::string_view> reserved_keywords() noexcept;
bool is_reserved_keyword(std::string_view word) noexcept;

struct StripResult {
  std::string text;
  bool unterminated_block = false;
};

// Removes `//` line comments (the newline itself is kept) and `/* */` block
// comments, matched non-greedily across lines. An unterminated block comment
// swallows the rest of the input and sets `unterminated_block`.
StripResult strip_comments_checked(std::string_view source);
std::string strip_comments(std::string_view source);

// strip_comments, then ASCII punctuation and whitespace become spaces, then
// trim and collapse. The result is one line of single-space-separated words.
std::string normalize(std::string_view source);

std::vector<std::string> split_words(std::string_view normalized);

// Order-preserving, case-sensitive filter against reserved_keywords().
std::vector<std::string> remove_keywords(std::vector<std::string> words);

struct TokenDoc {
  std::string contract_hash;
  std::vector<std::string> tokens;
  // Comment-stripped source lines, punctuation intact, for the regex scan.
  std::vector<std::string> lines;
  bool unterminated_comment = false;
};

// Fills tokens and lines. contract_hash is left for the caller to set, since
// hashing belongs to ingestion.
TokenDoc preprocess_contract(std::string_view source);

}  // namespace ethcluster
