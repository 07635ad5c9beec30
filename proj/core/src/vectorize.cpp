#include "ethcluster/vectorize.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "ethcluster/error.hpp"

namespace ethcluster {

Dictionary Dictionary::build(std::span<const std::vector<std::string>> docs) {
  Dictionary d;
  d.document_count_ = docs.size();
  std::vector<std::size_t> last_doc;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (const auto& w : docs[i]) {
      auto [it, inserted] = d.ids_.try_emplace(w, d.words_.size());
      if (inserted) {
        d.words_.push_back(w);
        d.doc_freq_.push_back(0);
        last_doc.push_back(static_cast<std::size_t>(-1));
      }
      if (last_doc[it->second] != i) {
        last_doc[it->second] = i;
        ++d.doc_freq_[it->second];
      }
    }
  }
  if (d.words_.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus contains no tokens");
  return d;
}

std::optional<WordId> Dictionary::id(const std::string& word) const {
  auto it = ids_.find(word);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

Bag Dictionary::doc2bow(std::span<const std::string> doc) const {
  std::map<WordId, std::size_t> counts;
  for (const auto& w : doc) {
    if (auto it = ids_.find(w); it != ids_.end()) ++counts[it->second];
  }
  return Bag(counts.begin(), counts.end());
}

TfidfModel::TfidfModel(Dictionary dictionary) : dictionary_(std::move(dictionary)) {
  const double docs = static_cast<double>(dictionary_.document_count());
  idf_.reserve(dictionary_.size());
  for (WordId id = 0; id < dictionary_.size(); ++id) {
    idf_.push_back(std::log(docs / static_cast<double>(dictionary_.document_frequency(id))));
  }
}

ScoredBag tfidf_scores(const TfidfModel& model, const Bag& bag, std::size_t doc_length) {
  if (doc_length == 0) return {};
  ScoredBag scores;
  scores.reserve(bag.size());
  double norm2 = 0.0;
  for (const auto& [id, count] : bag) {
    const double tf = static_cast<double>(count) / static_cast<double>(doc_length);
    const double s = tf * model.idf(id);
    scores.emplace_back(id, s);
    norm2 += s * s;
  }
  if (norm2 > 0.0) {
    const double norm = std::sqrt(norm2);
    for (auto& [id, s] : scores) s /= norm;
  }
  return scores;
}

std::span<const std::string_view> forced_keywords(VulnerabilityKind kind) {
  static constexpr std::array<std::string_view, 3> reentrancy = {"call", "balance", "balances"};
  static constexpr std::array<std::string_view, 3> timestamp = {"now", "timestamp", "block"};
  static constexpr std::array<std::string_view, 2> tx_origin = {"tx", "origin"};
  static constexpr std::array<std::string_view, 6> unchecked = {
      "call", "send", "delegatecall", "callcode", "staticcall", "value"};
  switch (kind) {
    case VulnerabilityKind::reentrancy: return reentrancy;
    case VulnerabilityKind::timestamp: return timestamp;
    case VulnerabilityKind::tx_origin: return tx_origin;
    case VulnerabilityKind::unchecked_call: return unchecked;
    case VulnerabilityKind::access_control: break;
  }
  return {};
}

KeywordVectorMap select_keywords(std::span<const Bag> bags, const TfidfModel& tfidf,
                                 const EmbeddingModel& embedding, double threshold,
                                 std::span<const KindFlags> flags) {
  for (const auto& f : flags) {
    if (f.flags.size() != bags.size()) {
      throw Error(ErrorCode::AlignmentError, "regex flag array does not match corpus size");
    }
  }
  const auto& dict = tfidf.dictionary();
  KeywordVectorMap map;
  const auto add = [&](const std::string& word) {
    if (map.contains(word)) return;
    if (auto v = embedding.vector(word)) map.emplace(word, std::vector<double>(v->begin(), v->end()));
  };

  for (std::size_t doc = 0; doc < bags.size(); ++doc) {
    std::size_t length = 0;
    for (const auto& [id, count] : bags[doc]) length += count;
    for (const auto& [id, score] : tfidf_scores(tfidf, bags[doc], length)) {
      if (score > threshold) add(dict.word(id));
    }
    for (const auto& f : flags) {
      if (f.flags[doc] != 1) continue;
      for (auto word : forced_keywords(f.kind)) add(std::string(word));
    }
  }
  return map;
}

std::vector<double> document_vector(std::span<const std::string> doc, const KeywordVectorMap& map,
                                    std::size_t dim) {
  std::vector<double> mean(dim, 0.0);
  const std::set<std::string> unique(doc.begin(), doc.end());
  std::size_t used = 0;
  for (const auto& w : unique) {
    auto it = map.find(w);
    if (it == map.end()) continue;
    if (it->second.size() != dim) throw Error(ErrorCode::DimError, "keyword vector has wrong width");
    for (std::size_t d = 0; d < dim; ++d) mean[d] += it->second[d];
    ++used;
  }
  if (used > 0) {
    for (auto& x : mean) x /= static_cast<double>(used);
  }
  return mean;
}

std::vector<std::vector<double>> document_vectors(std::span<const std::vector<std::string>> docs,
                                                  const KeywordVectorMap& map, std::size_t dim) {
  std::vector<std::vector<double>> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) out.push_back(document_vector(doc, map, dim));
  return out;
}

}  // namespace ethcluster
