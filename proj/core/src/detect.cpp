#include "ethcluster/detect.hpp"

#include <algorithm>
#include <deque>
#include <regex>

#include "ethcluster/error.hpp"

namespace ethcluster {

namespace {

struct Patterns {
  std::regex trigger{R"(\b(call)\b)", std::regex::ECMAScript | std::regex::icase};
  std::regex balance{R"(\b(balance|balances)\b)",
                     std::regex::ECMAScript | std::regex::icase};
  std::regex timestamp{R"(((\bnow\b)|(\bblock\.timestamp\b)))"};
  std::regex tx_origin{
      R"(^\s*(require|if)\s*\(\s*tx\.origin\s*(==|!=)\s*\w+\s*\))"};
  std::regex unchecked_prefix{R"(\b(require|if|bool|success)\b)"};
  std::regex unchecked_postfix{
      R"(\.(call|value|callcode|delegatecall|staticcall|send)\()"};
};

const Patterns& patterns() {
  static const Patterns p;
  return p;
}

bool any_line(Lines lines, const std::regex& re) {
  return std::any_of(lines.begin(), lines.end(), [&](const std::string& l) {
    return std::regex_search(l, re);
  });
}

}  // namespace

int detect_reentrancy(Lines lines) {
  const auto& p = patterns();
  // One entry per buffered line: whether it mentions balance(s).
  std::deque<bool> buffer;
  for (const auto& line : lines) {
    const bool mentions_balance = std::regex_search(line, p.balance);
    if (!buffer.empty()) {
      buffer.push_back(mentions_balance);
      if (std::find(buffer.begin(), buffer.end(), true) != buffer.end()) return 1;
      if (buffer.size() > 5) buffer.pop_front();
    }
    if (std::regex_search(line, p.trigger)) {
      buffer.assign(1, mentions_balance);
    }
  }
  return 0;
}

int detect_timestamp(Lines lines) {
  return any_line(lines, patterns().timestamp) ? 1 : 0;
}

int detect_tx_origin(Lines lines) {
  return any_line(lines, patterns().tx_origin) ? 1 : 0;
}

int detect_unchecked_call(Lines lines) {
  const auto& p = patterns();
  for (const auto& line : lines) {
    if (std::regex_search(line, p.unchecked_postfix) &&
        !std::regex_search(line, p.unchecked_prefix)) {
      return 1;
    }
  }
  return 0;
}

int detect(VulnerabilityKind kind, Lines lines) {
  switch (kind) {
    case VulnerabilityKind::reentrancy: return detect_reentrancy(lines);
    case VulnerabilityKind::timestamp: return detect_timestamp(lines);
    case VulnerabilityKind::tx_origin: return detect_tx_origin(lines);
    case VulnerabilityKind::unchecked_call: return detect_unchecked_call(lines);
    case VulnerabilityKind::access_control: break;
  }
  throw Error(ErrorCode::InvalidKind,
              std::string("no pattern defined for ") + std::string(to_string(kind)));
}

KindFlags scan_corpus(std::span<const TokenDoc> docs, VulnerabilityKind kind) {
  if (!has_pattern(kind)) {
    throw Error(ErrorCode::InvalidKind,
                std::string("no pattern defined for ") + std::string(to_string(kind)));
  }
  KindFlags out{kind, {}};
  out.flags.reserve(docs.size());
  for (const auto& doc : docs) {
    out.flags.push_back(static_cast<std::uint8_t>(detect(kind, doc.lines)));
  }
  return out;
}

}  // namespace ethcluster
