#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "ethcluster/types.hpp"

namespace ethcluster {

// The seven explorer families crawled for verified source, plus `local` for
// records read from a directory of .sol files.
enum class Chain {
  etherscan,
  bscscan,
  polygonscan,
  celoscan,
  ftmscan,
  optimism,
  arbiscan,
  local,
};

std::string_view to_string(Chain chain) noexcept;
Chain parse_chain(std::string_view text);  // throws Error(InvalidInput)

// Default get-source-code endpoint for an explorer family.
std::string default_endpoint(Chain chain);
// ETHCLUSTER_APIKEY_<CHAIN>, upper-cased.
std::string api_key_env_var(Chain chain);

using Timestamp = std::chrono::sys_seconds;
std::string format_iso8601(Timestamp t);
Timestamp parse_iso8601(std::string_view text);  // throws Error(FormatError)

std::string sha256_hex(std::string_view bytes);

// Digest of the whitespace-trimmed source. Metadata never enters the hash.
// Throws Error(InvalidInput) when the source is empty after trimming.
std::string source_hash(std::string_view source);

bool is_valid_address(std::string_view address) noexcept;

struct ContractRecord {
  Chain chain = Chain::etherscan;
  std::string address;
  std::string source;
  std::string source_hash;
  std::string compiler_version;
  Timestamp fetched_at{};

  bool operator==(const ContractRecord&) const = default;
};

// Builds a record and computes its hash.
ContractRecord make_record(Chain chain, std::string address, std::string source,
                           std::string compiler_version, Timestamp fetched_at);

void to_json(nlohmann::json& j, const ContractRecord& r);
void from_json(const nlohmann::json& j, ContractRecord& r);

// Token bucket guarding requests to one explorer. Capacity equals the rate,
// so at most `rate` requests pass in any one-second burst.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;

  explicit RateLimiter(double requests_per_second = 4.0);

  // Non-blocking; `now` is injectable for tests.
  bool try_acquire(Clock::time_point now);
  void acquire();

  double rate() const noexcept { return rate_; }

 private:
  void refill(Clock::time_point now);

  std::mutex mutex_;
  double rate_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
};

struct ExplorerEndpoint {
  Chain chain = Chain::etherscan;
  std::string base_url;  // scheme://host[:port]/path
  std::string api_key;
  std::chrono::milliseconds timeout{30000};
};

// Reads the API key from the environment and uses the default URL unless
// one is given. Throws Error(InvalidInput) when no key is configured.
ExplorerEndpoint endpoint_from_env(Chain chain, std::optional<std::string> base_url = {});

class ExplorerClient {
 public:
  explicit ExplorerClient(ExplorerEndpoint endpoint, double requests_per_second = 4.0);

  // GET ?module=contract&action=getsourcecode&address=...&apikey=...
  // Errors: TransportError, NotVerified, RateLimited, InvalidInput.
  ContractRecord fetch_verified_source(std::string_view address);

  const ExplorerEndpoint& endpoint() const noexcept { return endpoint_; }

 private:
  ExplorerEndpoint endpoint_;
  RateLimiter limiter_;
};

// Parses an explorer getsourcecode response body. Exposed for tests.
// Returns {source, compiler_version}.
std::pair<std::string, std::string> parse_source_response(std::string_view body);

enum class PutResult { Stored, Duplicate };

// Append-only NDJSON record log plus a sidecar file of known hashes, one per
// line. put() is serialized; contains() may run concurrently with it.
class ContractStore {
 public:
  explicit ContractStore(std::filesystem::path dir);

  PutResult put(const ContractRecord& record);
  bool contains(std::string_view source_hash) const;
  std::size_t size() const;

  // Records in insertion order.
  std::vector<ContractRecord> records() const;

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path log_path() const { return dir_ / "records.ndjson"; }
  std::filesystem::path index_path() const { return dir_ / "records.index"; }

 private:
  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
  std::unordered_set<std::string> index_;
};

struct DatasetEntry {
  ContractRecord record;
  Label truth = Label::clean;
};

struct Dataset {
  std::vector<DatasetEntry> entries;  // vulnerable entries first
  double vulnerable_fraction = 0.3;

  std::size_t vulnerable_count() const;
  std::vector<Label> truth_labels() const;
};

// All vulnerable records, then the first N clean records (stored order) so
// that vulnerable / total matches `fraction` to the nearest entry.
Dataset build_mixed_dataset(std::span<const ContractRecord> vulnerable,
                            std::span<const ContractRecord> clean, double fraction);

// Reads `records.ndjson` when the directory is a store, otherwise every
// *.sol file in lexicographic filename order as chain=local records.
std::vector<ContractRecord> load_records(const std::filesystem::path& dir);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace ethcluster
