#pragma once

// Hand-labeled snippets for the four regex detectors. Expected values were
// traced by hand against the patterns; the reentrancy cases follow the
// sliding-buffer scan line by line.

#include <string>
#include <vector>

#include "ethcluster/types.hpp"

namespace ethcluster::testing {

struct RegexFixture {
  const char* name;
  std::vector<std::string> lines;
  int expected;
};

inline std::vector<std::string> call_then_balance_at(int distance) {
  std::vector<std::string> lines{"msg.sender.call.value(amount)();"};
  for (int i = 1; i < distance; ++i) lines.push_back("x = " + std::to_string(i) + ";");
  lines.push_back("balances[msg.sender] -= amount;");
  return lines;
}

inline std::vector<RegexFixture> reentrancy_fixtures() {
  return {
      {"balance after call", {"msg.sender.call{value: v}(\"\");", "balances[msg.sender] = 0;"}, 1},
      {"balance before call", {"balances[msg.sender] = 0;", "msg.sender.call{value: v}(\"\");"}, 0},
      {"empty", {}, 0},
      {"call without balance", {"x.call(data);"}, 0},
      {"balance on final call line", {"x.call.value(balances[msg.sender])();"}, 0},
      {"balance on call line then any line", {"x.call.value(balances[msg.sender])();", "}"}, 1},
      {"window exactly five lines", call_then_balance_at(5), 1},
      {"window six lines, buffer slides", call_then_balance_at(6), 1},
      {"far balance after call", call_then_balance_at(20), 1},
      {"delegatecall is not call", {"addr.delegatecall(data);", "balances[a] = 0;"}, 0},
      {"staticcall is not call", {"x.staticcall(d);", "balance = 1;"}, 0},
      {"case insensitive", {"CALL(x);", "Balance = 0;"}, 1},
      {"recall has no boundary", {"recall = 1;", "balances[x] = 0;"}, 0},
      {"call_me has no boundary", {"call_me();", "balances"}, 0},
      {"totalBalance has no boundary", {"x.call(d);", "totalBalance = 0;"}, 0},
      {"balanceOf has no boundary", {"x.call(d);", "balanceOf[x] = 0;"}, 0},
      {"bare balances", {"x.call(d);", "y = balances;"}, 1},
      {"balance only before call", {"uint balance;", "x.call(d);", "z = 1;"}, 0},
      {"second call resets buffer",
       {"x.call(d);", "a;", "b;", "c;", "d;", "e;", "f;", "x.call(e);", "balances[m] = 0;"}, 1},
      {"call then unrelated line", {"a.call(x);", "y = 2;"}, 0},
      {"spaced call", {"a . call (x);", "balance -= 1;"}, 1},
      {"function named call", {"function call() {}", "balances[x]=0;"}, 1},
      {"blank lines inside window",
       {"msg.sender.call.value(amount)();", "", "", "", "", "balances[msg.sender] -= amount;"}, 1},
  };
}

inline std::vector<RegexFixture> timestamp_fixtures() {
  return {
      {"block.timestamp guard", {"if (block.timestamp > deadline) {"}, 1},
      {"embedded now", {"uint knownow2 = 1;"}, 0},
      {"empty", {}, 0},
      {"bare now", {"uint t = now;"}, 1},
      {"uppercase NOW", {"NOW"}, 0},
      {"missing dot", {"blockXtimestamp"}, 0},
      {"literal", {"block.timestamp"}, 1},
      {"nowTime", {"uint nowTime;"}, 0},
      {"now_", {"uint now_ = 1;"}, 0},
      {"timestamps plural", {"x = block.timestamps;"}, 0},
      {"myblock prefix", {"x = myblock.timestamp;"}, 0},
      {"now in arithmetic", {"return (now - start) > 1 days;"}, 1},
      {"event Now", {"emit Now(1);"}, 0},
      {"third line", {"a", "b", "require(now >= openTime);"}, 1},
      {"snow", {"uint snow;"}, 0},
      {"timestamp alone", {"uint  timestamp = block.number;"}, 0},
      {"space after dot", {"x = block. timestamp;"}, 0},
      {"compact", {"t=now;"}, 1},
      {"parenthesized", {"(now)"}, 1},
      {"knownow", {"knownow"}, 0},
      {"member now", {"x.now"}, 1},
      {"modulo", {"block.timestamp%2"}, 1},
  };
}

inline std::vector<RegexFixture> tx_origin_fixtures() {
  return {
      {"require equality", {"require(tx.origin == owner);"}, 1},
      {"emit only", {"emit Log(tx.origin);"}, 0},
      {"empty", {}, 0},
      {"indented if inequality", {"  if (tx.origin != owner) revert();"}, 1},
      {"dotted right operand", {"require(tx.origin == msg.sender);"}, 0},
      {"tx.origin on the right", {"require(owner == tx.origin);"}, 0},
      {"space before paren", {"require (tx.origin==owner_txorigin1);"}, 1},
      {"tab and inner spaces", {"\trequire( tx.origin == admin );"}, 1},
      {"not line leading", {"x = 1; require(tx.origin == owner);"}, 0},
      {"assignment", {"address a = tx.origin;"}, 0},
      {"compact if", {"if(tx.origin==owner){"}, 1},
      {"single equals", {"require(tx.origin = owner);"}, 0},
      {"message argument", {"require(tx.origin == owner, \"not owner\");"}, 0},
      {"capital Require", {"Require(tx.origin == owner);"}, 0},
      {"missing dot", {"require(txXorigin == owner);"}, 0},
      {"while guard", {"while (tx.origin == owner) {}"}, 0},
      {"numeric operand", {"require(tx.origin != 0);"}, 1},
      {"compound condition", {"if (tx.origin == owner && x) {"}, 0},
      {"commented out", {"// require(tx.origin == owner);"}, 0},
      {"no paren", {"requiretx.origin"}, 0},
      {"no semicolon", {"require(tx.origin==owner2)"}, 1},
      {"guard on first of two lines", {"if (tx.origin == owner)", "  revert();"}, 1},
  };
}

inline std::vector<RegexFixture> unchecked_call_fixtures() {
  return {
      {"bare send", {"to.send(amount);"}, 1},
      {"require send", {"require(to.send(amount));"}, 0},
      {"empty", {}, 0},
      {"bool capture", {"(bool ok, ) = to.call(data);"}, 0},
      {"call with options", {"to.call{value: 1}(\"\");"}, 0},
      {"legacy value", {"to.call.value(1)();"}, 1},
      {"if guard", {"if (!to.send(1)) revert();"}, 0},
      {"success capture", {"success = to.send(1);"}, 0},
      {"delegatecall", {"lib.delegatecall(msg.data);"}, 1},
      {"staticcall", {"x.staticcall(d);"}, 1},
      {"callcode", {"x.callcode(d);"}, 1},
      {"transfer", {"to.transfer(1);"}, 0},
      {"space before paren", {"x.call (d);"}, 0},
      {"check on next line", {"x.send(1);", "require(ok);"}, 1},
      {"second line unchecked", {"bool sent = x.send(1);", "x.call(d);"}, 1},
      {"boolean is not bool", {"x.send(1); boolean"}, 1},
      {"ifx is not if", {"ifx.send(1);"}, 1},
      {"assert is not a prefix", {"assert(x.send(1));"}, 1},
      {"capital Success", {"Success = x.send(1);"}, 1},
      {"sender is not send", {"x.sender(1);"}, 0},
      {"payable send", {"payable(x).send(1);"}, 1},
      {"success tuple", {"(bool success, ) = x.call(\"\");"}, 0},
  };
}

inline std::vector<RegexFixture> fixtures_for(VulnerabilityKind kind) {
  switch (kind) {
    case VulnerabilityKind::reentrancy: return reentrancy_fixtures();
    case VulnerabilityKind::timestamp: return timestamp_fixtures();
    case VulnerabilityKind::tx_origin: return tx_origin_fixtures();
    case VulnerabilityKind::unchecked_call: return unchecked_call_fixtures();
    case VulnerabilityKind::access_control: break;
  }
  return {};
}

}  // namespace ethcluster::testing
