#include "ethcluster/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include <httplib.h>

#include "ethcluster/error.hpp"

namespace ethcluster {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<Chain, 8> kChains = {
    Chain::etherscan, Chain::bscscan,  Chain::polygonscan, Chain::celoscan,
    Chain::ftmscan,   Chain::optimism, Chain::arbiscan,    Chain::local};

std::string_view trim(std::string_view s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::PathError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Multi-file verified sources come back as "{{ ...standard json... }}".
std::string flatten_multi_file(const std::string& source) {
  std::string_view body = trim(source);
  if (body.size() < 4 || body.substr(0, 2) != "{{") return source;
  json parsed = json::parse(body.substr(1, body.size() - 2), nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("sources")) return source;
  std::string joined;
  for (const auto& [name, file] : parsed["sources"].items()) {
    if (!file.contains("content")) continue;
    joined += "// File: " + name + "\n";
    joined += file["content"].get<std::string>();
    joined += "\n";
  }
  return joined.empty() ? source : joined;
}

}  // namespace

std::string_view to_string(Chain chain) noexcept {
  switch (chain) {
    case Chain::etherscan: return "etherscan";
    case Chain::bscscan: return "bscscan";
    case Chain::polygonscan: return "polygonscan";
    case Chain::celoscan: return "celoscan";
    case Chain::ftmscan: return "ftmscan";
    case Chain::optimism: return "optimism";
    case Chain::arbiscan: return "arbiscan";
    case Chain::local: return "local";
  }
  return "unknown";
}

Chain parse_chain(std::string_view text) {
  for (auto c : kChains) {
    if (to_string(c) == text) return c;
  }
  throw Error(ErrorCode::InvalidInput, "unknown chain '" + std::string(text) + "'");
}

std::string default_endpoint(Chain chain) {
  switch (chain) {
    case Chain::etherscan: return "https://api.etherscan.io/api";
    case Chain::bscscan: return "https://api.bscscan.com/api";
    case Chain::polygonscan: return "https://api.polygonscan.com/api";
    case Chain::celoscan: return "https://api.celoscan.io/api";
    case Chain::ftmscan: return "https://api.ftmscan.com/api";
    case Chain::optimism: return "https://api-optimistic.etherscan.io/api";
    case Chain::arbiscan: return "https://api.arbiscan.io/api";
    case Chain::local: break;
  }
  throw Error(ErrorCode::InvalidInput, "local records have no explorer endpoint");
}

std::string api_key_env_var(Chain chain) {
  std::string name = "ETHCLUSTER_APIKEY_";
  for (char c : to_string(chain)) {
    name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return name;
}

std::string format_iso8601(Timestamp t) {
  const std::time_t tt = t.time_since_epoch().count();
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

Timestamp parse_iso8601(std::string_view text) {
  std::tm tm{};
  std::istringstream in{std::string(text)};
  in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
  if (in.fail()) {
    throw Error(ErrorCode::FormatError, "bad timestamp '" + std::string(text) + "'");
  }
  return Timestamp{std::chrono::seconds{timegm(&tm)}};
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::InvalidInput, "sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string source_hash(std::string_view source) {
  const auto trimmed = trim(source);
  if (trimmed.empty()) throw Error(ErrorCode::InvalidInput, "empty contract source");
  return sha256_hex(trimmed);
}

bool is_valid_address(std::string_view address) noexcept {
  if (address.size() != 42 || address[0] != '0' || (address[1] != 'x' && address[1] != 'X')) {
    return false;
  }
  return std::all_of(address.begin() + 2, address.end(),
                     [](unsigned char c) { return std::isxdigit(c) != 0; });
}

ContractRecord make_record(Chain chain, std::string address, std::string source,
                           std::string compiler_version, Timestamp fetched_at) {
  if (!is_valid_address(address)) {
    throw Error(ErrorCode::InvalidInput, "malformed address '" + address + "'");
  }
  ContractRecord r;
  r.chain = chain;
  r.address = std::move(address);
  r.source_hash = source_hash(source);
  r.source = std::move(source);
  r.compiler_version = std::move(compiler_version);
  r.fetched_at = fetched_at;
  return r;
}

void to_json(json& j, const ContractRecord& r) {
  j = json{{"chain", to_string(r.chain)},
           {"address", r.address},
           {"source", r.source},
           {"source_hash", r.source_hash},
           {"compiler_version", r.compiler_version},
           {"fetched_at", format_iso8601(r.fetched_at)}};
}

void from_json(const json& j, ContractRecord& r) {
  try {
    r.chain = parse_chain(j.at("chain").get<std::string>());
    r.address = j.at("address").get<std::string>();
    r.source = j.at("source").get<std::string>();
    r.source_hash = j.at("source_hash").get<std::string>();
    r.compiler_version = j.value("compiler_version", "");
    r.fetched_at = parse_iso8601(j.at("fetched_at").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad contract record: ") + e.what());
  }
}

// --- rate limiting ---------------------------------------------------------

RateLimiter::RateLimiter(double requests_per_second)
    : rate_(requests_per_second),
      capacity_(std::max(1.0, requests_per_second)),
      tokens_(capacity_),
      last_(Clock::now()) {
  if (!(requests_per_second > 0.0)) {
    throw Error(ErrorCode::InvalidInput, "rate limit must be positive");
  }
}

void RateLimiter::refill(Clock::time_point now) {
  if (now <= last_) return;
  const double elapsed = std::chrono::duration<double>(now - last_).count();
  tokens_ = std::min(capacity_, tokens_ + elapsed * rate_);
  last_ = now;
}

bool RateLimiter::try_acquire(Clock::time_point now) {
  std::lock_guard lock(mutex_);
  refill(now);
  if (tokens_ < 1.0) return false;
  tokens_ -= 1.0;
  return true;
}

void RateLimiter::acquire() {
  for (;;) {
    std::chrono::duration<double> wait{};
    {
      std::lock_guard lock(mutex_);
      refill(Clock::now());
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    }
    std::this_thread::sleep_for(wait);
  }
}

// --- explorer client -------------------------------------------------------

ExplorerEndpoint endpoint_from_env(Chain chain, std::optional<std::string> base_url) {
  ExplorerEndpoint ep;
  ep.chain = chain;
  ep.base_url = base_url ? *base_url : default_endpoint(chain);
  const auto var = api_key_env_var(chain);
  const char* key = std::getenv(var.c_str());
  if (key == nullptr || *key == '\0') {
    throw Error(ErrorCode::InvalidInput, "no API key configured; set " + var);
  }
  ep.api_key = key;
  return ep;
}

ExplorerClient::ExplorerClient(ExplorerEndpoint endpoint, double requests_per_second)
    : endpoint_(std::move(endpoint)), limiter_(requests_per_second) {}

std::pair<std::string, std::string> parse_source_response(std::string_view body) {
  json parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw Error(ErrorCode::TransportError, "explorer returned a non-JSON body");
  }
  const auto& result = parsed.contains("result") ? parsed["result"] : json();
  if (result.is_string()) {
    // Explorers report throttling as status "0" with a text result.
    const auto text = result.get<std::string>();
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower.find("rate limit") != std::string::npos) {
      throw Error(ErrorCode::RateLimited, text);
    }
    throw Error(ErrorCode::TransportError, "explorer error: " + text);
  }
  if (!result.is_array() || result.empty() || !result[0].is_object()) {
    throw Error(ErrorCode::NotVerified, "explorer returned no source entry");
  }
  const auto& entry = result[0];
  std::string source = entry.value("SourceCode", "");
  if (trim(source).empty()) throw Error(ErrorCode::NotVerified, "contract source is not verified");
  return {flatten_multi_file(source), entry.value("CompilerVersion", "")};
}

ContractRecord ExplorerClient::fetch_verified_source(std::string_view address) {
  if (!is_valid_address(address)) {
    throw Error(ErrorCode::InvalidInput, "malformed address '" + std::string(address) + "'");
  }
  const auto& url = endpoint_.base_url;
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  const std::string origin = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  limiter_.acquire();

  httplib::Client client(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint_.timeout);
  client.set_connection_timeout(secs);
  client.set_read_timeout(secs);
  const httplib::Params params = {{"module", "contract"},
                                  {"action", "getsourcecode"},
                                  {"address", std::string(address)},
                                  {"apikey", endpoint_.api_key}};
  auto res = client.Get(path, params, httplib::Headers{});
  if (!res) {
    throw Error(ErrorCode::TransportError,
                "request to " + origin + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status == 429) throw Error(ErrorCode::RateLimited, "explorer returned HTTP 429");
  if (res->status != 200) {
    throw Error(ErrorCode::TransportError, "explorer returned HTTP " + std::to_string(res->status));
  }
  auto [source, compiler] = parse_source_response(res->body);
  return make_record(endpoint_.chain, std::string(address), std::move(source),
                     std::move(compiler),
                     std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
}

// --- store -----------------------------------------------------------------

ContractStore::ContractStore(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::StoreError, "cannot create store " + dir_.string());
  std::ifstream index(index_path());
  std::string line;
  while (std::getline(index, line)) {
    if (!line.empty()) index_.insert(line);
  }
}

PutResult ContractStore::put(const ContractRecord& record) {
  if (record.source_hash.size() != 64 || record.source_hash != source_hash(record.source)) {
    throw Error(ErrorCode::InvalidInput, "record hash does not match its source");
  }
  std::unique_lock lock(mutex_);
  if (index_.contains(record.source_hash)) return PutResult::Duplicate;

  {
    std::ofstream log(log_path(), std::ios::app | std::ios::binary);
    log << json(record).dump() << '\n';
    log.flush();
    if (!log) throw Error(ErrorCode::StoreError, "write failed: " + log_path().string());
  }
  {
    std::ofstream index(index_path(), std::ios::app);
    index << record.source_hash << '\n';
    index.flush();
    if (!index) throw Error(ErrorCode::StoreError, "write failed: " + index_path().string());
  }
  index_.insert(record.source_hash);
  return PutResult::Stored;
}

bool ContractStore::contains(std::string_view hash) const {
  std::shared_lock lock(mutex_);
  return index_.contains(std::string(hash));
}

std::size_t ContractStore::size() const {
  std::shared_lock lock(mutex_);
  return index_.size();
}

std::vector<ContractRecord> ContractStore::records() const {
  std::shared_lock lock(mutex_);
  std::vector<ContractRecord> out;
  std::ifstream log(log_path(), std::ios::binary);
  std::string line;
  while (std::getline(log, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::StoreError, "corrupt store line");
    out.push_back(j.get<ContractRecord>());
  }
  return out;
}

// --- datasets --------------------------------------------------------------

std::size_t Dataset::vulnerable_count() const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [](const auto& e) { return e.truth == Label::vulnerable; }));
}

std::vector<Label> Dataset::truth_labels() const {
  std::vector<Label> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.truth);
  return out;
}

Dataset build_mixed_dataset(std::span<const ContractRecord> vulnerable,
                            std::span<const ContractRecord> clean, double fraction) {
  if (vulnerable.empty() || clean.empty()) {
    throw Error(ErrorCode::InvalidInput, "both vulnerable and clean sets must be non-empty");
  }
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::InvalidInput, "fraction must lie strictly between 0 and 1");
  }
  const double v = static_cast<double>(vulnerable.size());
  const auto needed = static_cast<std::size_t>(std::llround(v * (1.0 - fraction) / fraction));
  if (needed > clean.size()) {
    throw Error(ErrorCode::InsufficientData,
                "need " + std::to_string(needed) + " clean records, have " +
                    std::to_string(clean.size()));
  }
  Dataset ds;
  ds.vulnerable_fraction = fraction;
  ds.entries.reserve(vulnerable.size() + needed);
  for (const auto& r : vulnerable) ds.entries.push_back({r, Label::vulnerable});
  for (std::size_t i = 0; i < needed; ++i) ds.entries.push_back({clean[i], Label::clean});
  return ds;
}

std::vector<ContractRecord> load_records(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::PathError, "not a directory: " + dir.string());
  if (fs::exists(dir / "records.ndjson")) return ContractStore(dir).records();

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".sol") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<ContractRecord> out;
  out.reserve(files.size());
  for (const auto& f : files) {
    std::string source = read_file(f);
    if (trim(source).empty()) continue;
    const auto hash = source_hash(source);
    // Local files have no on-chain address; derive a stable placeholder.
    out.push_back(make_record(Chain::local, "0x" + hash.substr(0, 40), std::move(source), "",
                              Timestamp{}));
  }
  return out;
}

void save_dataset(const Dataset& dataset, const fs::path& path) {
  json entries = json::array();
  for (const auto& e : dataset.entries) {
    entries.push_back({{"label", to_string(e.truth)}, {"record", e.record}});
  }
  json doc{{"vulnerable_fraction", dataset.vulnerable_fraction}, {"entries", std::move(entries)}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::PathError, "cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

Dataset load_dataset(const fs::path& path) {
  const std::string text = read_file(path);
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::FormatError, "dataset is not JSON: " + path.string());
  Dataset ds;
  try {
    ds.vulnerable_fraction = doc.at("vulnerable_fraction").get<double>();
    for (const auto& e : doc.at("entries")) {
      auto label = parse_label(e.at("label").get<std::string>());
      if (!label) throw Error(ErrorCode::FormatError, "bad label in dataset");
      ds.entries.push_back({e.at("record").get<ContractRecord>(), *label});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad dataset: ") + e.what());
  }
  return ds;
}

}  // namespace ethcluster
