#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ethcluster/error.hpp"
#include "ethcluster/vectorize.hpp"

namespace ethcluster {
namespace {

using Docs = std::vector<std::vector<std::string>>;

EmbeddingModel fixed_embedding(std::vector<std::pair<std::string, std::vector<double>>> rows) {
  EmbeddingConfig cfg;
  cfg.vector_size = static_cast<int>(rows.front().second.size());
  std::vector<std::string> words;
  std::vector<double> values;
  for (auto& [w, v] : rows) {
    words.push_back(w);
    values.insert(values.end(), v.begin(), v.end());
  }
  return EmbeddingModel(cfg, words, values);
}

double score_of(const ScoredBag& scores, WordId id) {
  for (const auto& [i, s] : scores)
    if (i == id) return s;
  ADD_FAILURE() << "id " << id << " not scored";
  return NAN;
}

TEST(Dictionary, CountsDocumentFrequency) {
  const auto d = Dictionary::build(Docs{{"a", "b"}, {"b", "c"}});
  EXPECT_EQ(d.document_count(), 2u);
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.id("a"), 0u);
  EXPECT_EQ(d.id("b"), 1u);
  EXPECT_EQ(d.id("c"), 2u);
  EXPECT_EQ(d.document_frequency(*d.id("a")), 1u);
  EXPECT_EQ(d.document_frequency(*d.id("b")), 2u);
  EXPECT_EQ(d.document_frequency(*d.id("c")), 1u);
}

TEST(Dictionary, SingleAndRepeatedDocs) {
  const auto one = Dictionary::build(Docs{{"x"}});
  EXPECT_EQ(one.document_count(), 1u);
  EXPECT_EQ(one.document_frequency(0), 1u);
  const auto twice = Dictionary::build(Docs{{"a"}, {"a"}});
  EXPECT_EQ(twice.size(), 1u);
  EXPECT_EQ(twice.document_frequency(0), 2u);
}

TEST(Dictionary, EmptyCorpus) {
  for (const Docs& docs : {Docs{}, Docs{{}, {}}}) {
    try {
      Dictionary::build(docs);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::EmptyCorpus);
    }
  }
}

TEST(Doc2Bow, CountsAndDrops) {
  const auto d = Dictionary::build(Docs{{"a", "b"}});
  EXPECT_EQ(d.doc2bow(std::vector<std::string>{"a", "a", "b"}), (Bag{{0, 2}, {1, 1}}));
  EXPECT_EQ(d.doc2bow(std::vector<std::string>{"unknown"}), Bag{});
  EXPECT_EQ(d.doc2bow(std::vector<std::string>{}), Bag{});
  EXPECT_EQ(d.doc2bow(std::vector<std::string>{"b", "a"}), (Bag{{0, 1}, {1, 1}}));
}

TEST(TfidfScores, TwoDocumentExample) {
  const Docs docs{{"a", "b"}, {"a", "c"}};
  const TfidfModel model(Dictionary::build(docs));
  EXPECT_DOUBLE_EQ(model.idf(0), 0.0);
  EXPECT_NEAR(model.idf(1), std::log(2.0), 1e-15);
  // Raw score(b) = 0.5 * ln 2 = 0.34657...; after normalization 1.
  const auto s = tfidf_scores(model, model.dictionary().doc2bow(docs[0]), 2);
  EXPECT_NEAR(score_of(s, 0), 0.0, 1e-12);
  EXPECT_NEAR(score_of(s, 1), 1.0, 1e-12);
}

// Hand-computed tf * ln(D / d_t), L2-normalized per document.
TEST(TfidfScores, ThreeDocumentOracle) {
  const Docs docs{{"a", "b", "b", "c"}, {"a", "c", "d"}, {"a", "e", "e", "e", "d"}};
  const TfidfModel model(Dictionary::build(docs));
  const auto& dict = model.dictionary();
  auto id = [&](const char* w) { return *dict.id(w); };
  const auto s0 = tfidf_scores(model, dict.doc2bow(docs[0]), 4);
  EXPECT_NEAR(score_of(s0, id("a")), 0.0, 1e-9);
  EXPECT_NEAR(score_of(s0, id("b")), 0.9833962686209181, 1e-9);
  EXPECT_NEAR(score_of(s0, id("c")), 0.18147115159841573, 1e-9);
  const auto s1 = tfidf_scores(model, dict.doc2bow(docs[1]), 3);
  EXPECT_NEAR(score_of(s1, id("c")), 0.7071067811865475, 1e-9);
  EXPECT_NEAR(score_of(s1, id("d")), 0.7071067811865475, 1e-9);
  const auto s2 = tfidf_scores(model, dict.doc2bow(docs[2]), 5);
  EXPECT_NEAR(score_of(s2, id("d")), 0.12210288640654822, 1e-9);
  EXPECT_NEAR(score_of(s2, id("e")), 0.9925174482754393, 1e-9);
}

TEST(TfidfScores, UbiquitousWordAndSingleDocument) {
  const Docs docs{{"a", "x"}, {"a", "y"}, {"a"}};
  const TfidfModel model(Dictionary::build(docs));
  for (const auto& d : docs) {
    const auto s = tfidf_scores(model, model.dictionary().doc2bow(d), d.size());
    EXPECT_EQ(score_of(s, 0), 0.0);
  }
  const Docs single{{"p", "q", "p"}};
  const TfidfModel one(Dictionary::build(single));
  for (const auto& [i, s] : tfidf_scores(one, one.dictionary().doc2bow(single[0]), 3)) EXPECT_EQ(s, 0.0);
  EXPECT_TRUE(tfidf_scores(one, {}, 0).empty());
}

TEST(TfidfProperties, BoundsAndNormalization) {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    Docs docs(2 + rng() % 8);
    for (auto& d : docs)
      for (int i = rng() % 12; i >= 0; --i) d.push_back("w" + std::to_string(rng() % 10));
    const TfidfModel model(Dictionary::build(docs));
    const double D = static_cast<double>(docs.size());
    for (WordId id = 0; id < model.dictionary().size(); ++id) {
      EXPECT_GE(model.idf(id), 0.0);
      EXPECT_LE(model.idf(id), std::log(D) + 1e-15);
    }
    for (const auto& d : docs) {
      const auto bag = model.dictionary().doc2bow(d);
      double tf_sum = 0.0, norm2 = 0.0;
      for (const auto& [i, n] : bag) tf_sum += static_cast<double>(n) / d.size();
      if (!d.empty()) EXPECT_NEAR(tf_sum, 1.0, 1e-12);
      for (const auto& [i, s] : tfidf_scores(model, bag, d.size())) norm2 += s * s;
      if (norm2 > 0) EXPECT_NEAR(std::sqrt(norm2), 1.0, 1e-9);
    }
  }
}

struct Fixture {
  Docs docs{{"alpha", "beta", "call"}, {"alpha", "gamma"}, {"alpha", "delta", "delta"}};
  TfidfModel tfidf{Dictionary::build(docs)};
  EmbeddingModel embedding = fixed_embedding({{"alpha", {1, 0}},
                                              {"beta", {0, 1}},
                                              {"gamma", {2, 2}},
                                              {"delta", {4, 0}},
                                              {"call", {3, 3}},
                                              {"balance", {5, 5}}});
  std::vector<Bag> bags() const {
    std::vector<Bag> out;
    for (const auto& d : docs) out.push_back(tfidf.dictionary().doc2bow(d));
    return out;
  }
};

TEST(SelectKeywords, ThresholdOneSelectsNothing) {
  Fixture f;
  EXPECT_TRUE(select_keywords(f.bags(), f.tfidf, f.embedding, 1.0, {}).empty());
}

TEST(SelectKeywords, ThresholdZeroSelectsEveryPositiveScore) {
  Fixture f;
  const auto map = select_keywords(f.bags(), f.tfidf, f.embedding, 0.0, {});
  EXPECT_EQ(map.size(), 4u);
  EXPECT_FALSE(map.contains("alpha"));  // in every document, idf 0
  EXPECT_EQ(map.at("delta"), (std::vector<double>{4, 0}));
}

TEST(SelectKeywords, FlagForcesPatternKeywords) {
  Fixture f;
  const std::vector<KindFlags> flags{{VulnerabilityKind::reentrancy, {1, 0, 0}}};
  const auto map = select_keywords(f.bags(), f.tfidf, f.embedding, 1.0, flags);
  EXPECT_TRUE(map.contains("call"));
  EXPECT_TRUE(map.contains("balance"));    // forced set, present in the embedding
  EXPECT_FALSE(map.contains("balances"));  // not in the embedding
}

TEST(SelectKeywords, UnflaggedDocumentsForceNothing) {
  Fixture f;
  const std::vector<KindFlags> flags{{VulnerabilityKind::reentrancy, {0, 0, 0}}};
  EXPECT_TRUE(select_keywords(f.bags(), f.tfidf, f.embedding, 1.0, flags).empty());
}

TEST(SelectKeywords, MisalignedFlags) {
  Fixture f;
  const std::vector<KindFlags> flags{{VulnerabilityKind::reentrancy, {1}}};
  try {
    select_keywords(f.bags(), f.tfidf, f.embedding, 0.5, flags);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AlignmentError);
  }
}

TEST(ForcedKeywords, PerKindSets) {
  EXPECT_EQ(forced_keywords(VulnerabilityKind::tx_origin).size(), 2u);
  EXPECT_EQ(forced_keywords(VulnerabilityKind::unchecked_call).size(), 6u);
  EXPECT_TRUE(forced_keywords(VulnerabilityKind::access_control).empty());
}

TEST(DocumentVectors, MeanDedupAndPadding) {
  const KeywordVectorMap map{{"u", {1, 0}}, {"v", {0, 1}}, {"w", {2, 4}}};
  EXPECT_EQ(document_vector(std::vector<std::string>{"u", "v", "x"}, map, 2), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(document_vector(std::vector<std::string>{"w", "w", "w"}, map, 2), (std::vector<double>{2, 4}));
  EXPECT_EQ(document_vector(std::vector<std::string>{"none"}, KeywordVectorMap{}, 3),
            (std::vector<double>{0, 0, 0}));
  const auto all = document_vectors(Docs{{"u"}, {}, {"v", "u"}}, map, 2);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0], (std::vector<double>{1, 0}));
  EXPECT_EQ(all[1], (std::vector<double>{0, 0}));
  EXPECT_EQ(all[2], (std::vector<double>{0.5, 0.5}));
}

TEST(DocumentVectors, MeanContainment) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-3, 3);
  KeywordVectorMap map;
  for (int i = 0; i < 12; ++i) map["k" + std::to_string(i)] = {u(rng), u(rng), u(rng)};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> doc;
    for (int i = rng() % 10; i >= 0; --i) doc.push_back("k" + std::to_string(rng() % 15));
    const auto v = document_vector(doc, map, 3);
    for (int d = 0; d < 3; ++d) {
      double lo = INFINITY, hi = -INFINITY;
      for (const auto& w : doc)
        if (map.contains(w)) lo = std::min(lo, map[w][d]), hi = std::max(hi, map[w][d]);
      if (std::isinf(lo)) {
        EXPECT_EQ(v[d], 0.0);
      } else {
        EXPECT_GE(v[d], lo - 1e-12);
        EXPECT_LE(v[d], hi + 1e-12);
      }
    }
  }
}

}  // namespace
}  // namespace ethcluster
