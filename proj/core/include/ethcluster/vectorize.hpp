#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ethcluster/detect.hpp"
#include "ethcluster/embed.hpp"
#include "ethcluster/types.hpp"

namespace ethcluster {

using WordId = std::size_t;
using Bag = std::vector<std::pair<WordId, std::size_t>>;  // sorted by id
using ScoredBag = std::vector<std::pair<WordId, double>>;

// Word ids are dense and follow first occurrence in corpus order.
class Dictionary {
 public:
  static Dictionary build(std::span<const std::vector<std::string>> docs);

  std::size_t size() const noexcept { return words_.size(); }
  std::size_t document_count() const noexcept { return document_count_; }
  const std::string& word(WordId id) const { return words_.at(id); }
  std::optional<WordId> id(const std::string& word) const;
  std::size_t document_frequency(WordId id) const { return doc_freq_.at(id); }

  // Counts in-dictionary words; unknown words are dropped.
  Bag doc2bow(std::span<const std::string> doc) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> ids_;
  std::vector<std::size_t> doc_freq_;
  std::size_t document_count_ = 0;
};

// idf(t) = ln(D / d_t).
class TfidfModel {
 public:
  explicit TfidfModel(Dictionary dictionary);

  const Dictionary& dictionary() const noexcept { return dictionary_; }
  double idf(WordId id) const { return idf_.at(id); }

 private:
  Dictionary dictionary_;
  std::vector<double> idf_;
};

// Raw score is (n / doc_length) * idf, then the document's score vector is
// scaled to unit L2 norm. An all-zero document stays all-zero; a zero
// doc_length returns an empty list.
ScoredBag tfidf_scores(const TfidfModel& model, const Bag& bag, std::size_t doc_length);

// Tokens force-included when a document carries the kind's regex flag.
std::span<const std::string_view> forced_keywords(VulnerabilityKind kind);

// Ordered so that serialization and averaging are deterministic.
using KeywordVectorMap = std::map<std::string, std::vector<double>>;

// Every in-vocabulary word scoring strictly above `threshold` in some
// document, plus the forced keywords of each flagged document's kind.
// Throws Error(AlignmentError) when a flag array does not match the corpus.
KeywordVectorMap select_keywords(std::span<const Bag> bags, const TfidfModel& tfidf,
                                 const EmbeddingModel& embedding, double threshold,
                                 std::span<const KindFlags> flags);

// Mean of the mapped vectors of a document's unique tokens, or zeros when
// none are mapped.
std::vector<double> document_vector(std::span<const std::string> doc, const KeywordVectorMap& map,
                                    std::size_t dim);

std::vector<std::vector<double>> document_vectors(std::span<const std::vector<std::string>> docs,
                                                  const KeywordVectorMap& map, std::size_t dim);

}  // namespace ethcluster
