#include <benchmark/benchmark.h>

#include <random>

#include "corpus.hpp"
#include "ethcluster/cluster.hpp"
#include "ethcluster/detect.hpp"
#include "ethcluster/embed.hpp"
#include "ethcluster/preprocess.hpp"
#include "ethcluster/vectorize.hpp"

using namespace ethcluster;

namespace {

std::vector<std::string> sources(int n) {
  std::mt19937 rng(1);
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i)
    out.push_back(i % 3 == 0 ? testing::vulnerable_contract(VulnerabilityKind::reentrancy, rng, i)
                             : testing::clean_contract(rng, i));
  return out;
}

std::vector<std::vector<std::string>> token_docs(int n) {
  std::vector<std::vector<std::string>> docs;
  for (const auto& s : sources(n)) docs.push_back(preprocess_contract(s).tokens);
  return docs;
}

void BM_Preprocess(benchmark::State& state) {
  const auto src = sources(static_cast<int>(state.range(0)));
  for (auto _ : state)
    for (const auto& s : src) benchmark::DoNotOptimize(preprocess_contract(s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Preprocess)->Arg(100)->Arg(1000);

void BM_DetectReentrancy(benchmark::State& state) {
  std::vector<TokenDoc> docs;
  for (const auto& s : sources(static_cast<int>(state.range(0)))) docs.push_back(preprocess_contract(s));
  for (auto _ : state) benchmark::DoNotOptimize(scan_corpus(docs, VulnerabilityKind::reentrancy));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DetectReentrancy)->Arg(100)->Arg(1000);

void BM_Tfidf(benchmark::State& state) {
  const auto docs = token_docs(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    const TfidfModel model(Dictionary::build(docs));
    for (const auto& d : docs) benchmark::DoNotOptimize(tfidf_scores(model, model.dictionary().doc2bow(d), d.size()));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Tfidf)->Arg(100)->Arg(1000);

void BM_TrainEmbedding(benchmark::State& state) {
  const auto docs = token_docs(300);
  EmbeddingConfig cfg;
  cfg.vector_size = static_cast<int>(state.range(0));
  cfg.workers = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(train_embedding(docs, cfg));
}
BENCHMARK(BM_TrainEmbedding)->Args({10, 1})->Args({100, 1})->Args({100, 4})->Unit(benchmark::kMillisecond);

void BM_Kmeans(benchmark::State& state) {
  const auto n = state.range(0);
  const Matrix X = Matrix::Random(n, 50);
  for (auto _ : state) benchmark::DoNotOptimize(kmeans_fit(X, 6, 100, 1194));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Kmeans)->Arg(300)->Arg(3000)->Unit(benchmark::kMillisecond);

void BM_PcaFit(benchmark::State& state) {
  const Matrix X = Matrix::Random(state.range(0), 300);
  for (auto _ : state) benchmark::DoNotOptimize(pca_fit(X, 50));
}
BENCHMARK(BM_PcaFit)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
