#include "ethcluster/preprocess.hpp"

#include <algorithm>
#include <array>

namespace ethcluster {

namespace {

constexpr std::array<std::string_view, 52> kReserved = {
    "pragma",    "import",   "contract",  "interface", "library",
    "struct",    "enum",     "function",  "event",     "error",
    "using",     "for",      "constructor", "mapping", "address",
    "bool",      "string",   "var",       "bytes",     "uint",
    "int",       "if",       "else",      "while",     "do",
    "break",     "continue", "return",    "throw",     "emit",
    "public",    "private",  "internal",  "external",  "constant",
    "immutable", "view",     "pure",      "virtual",   "override",
    "storage",   "memory",   "calldata",  "try",       "catch",
    "revert",    "assert",   "require",   "new",       "delete",
    "this",      "solidity"};

bool is_ascii_punct(unsigned char c) {
  return (c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) ||
         (c >= 0x5b && c <= 0x60) || (c >= 0x7b && c <= 0x7e);
}

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\v' ||
         c == '\f';
}

}  // namespace

std::span<const std::string_view> reserved_keywords() noexcept {
  return kReserved;
}

bool is_reserved_keyword(std::string_view word) noexcept {
  return std::find(kReserved.begin(), kReserved.end(), word) != kReserved.end();
}

StripResult strip_comments_checked(std::string_view source) {
  StripResult out;
  out.text.reserve(source.size());
  std::size_t i = 0;
  const std::size_t n = source.size();
  while (i < n) {
    if (source[i] == '/' && i + 1 < n && source[i + 1] == '/') {
      const auto eol = source.find('\n', i + 2);
      i = eol == std::string_view::npos ? n : eol;
    } else if (source[i] == '/' && i + 1 < n && source[i + 1] == '*') {
      const auto close = source.find("*/", i + 2);
      if (close == std::string_view::npos) {
        out.unterminated_block = true;
        i = n;
      } else {
        i = close + 2;
      }
    } else {
      out.text.push_back(source[i]);
      ++i;
    }
  }
  return out;
}

std::string strip_comments(std::string_view source) {
  return strip_comments_checked(source).text;
}

std::string normalize(std::string_view source) {
  const std::string stripped = strip_comments(source);
  std::string out;
  out.reserve(stripped.size());
  bool pending_space = false;
  for (unsigned char c : stripped) {
    if (is_ascii_punct(c) || is_ascii_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

std::vector<std::string> split_words(std::string_view normalized) {
  std::vector<std::string> words;
  std::size_t start = 0;
  while (start < normalized.size()) {
    auto end = normalized.find(' ', start);
    if (end == std::string_view::npos) end = normalized.size();
    if (end > start) words.emplace_back(normalized.substr(start, end - start));
    start = end + 1;
  }
  return words;
}

std::vector<std::string> remove_keywords(std::vector<std::string> words) {
  std::erase_if(words, [](const std::string& w) { return is_reserved_keyword(w); });
  return words;
}

TokenDoc preprocess_contract(std::string_view source) {
  TokenDoc doc;
  auto stripped = strip_comments_checked(source);
  doc.unterminated_comment = stripped.unterminated_block;

  std::string_view view = stripped.text;
  std::size_t start = 0;
  while (start < view.size()) {
    auto end = view.find('\n', start);
    if (end == std::string_view::npos) end = view.size();
    doc.lines.emplace_back(view.substr(start, end - start));
    start = end + 1;
  }

  doc.tokens = remove_keywords(split_words(normalize(source)));
  return doc;
}

}  // namespace ethcluster
