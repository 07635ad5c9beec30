#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ethcluster/cluster.hpp"
#include "ethcluster/detect.hpp"
#include "ethcluster/embed.hpp"
#include "ethcluster/evaluate.hpp"
#include "ethcluster/ingest.hpp"
#include "ethcluster/preprocess.hpp"
#include "ethcluster/types.hpp"
#include "ethcluster/vectorize.hpp"

namespace ethcluster {

inline constexpr std::int64_t kDefaultSeed = 1194;

struct PipelineConfig {
  VulnerabilityKind vulnerability = VulnerabilityKind::reentrancy;
  int vector_size = 10;
  double tfidf_threshold = 0.7;
  int num_clusters = 5;
  std::int64_t seed = kDefaultSeed;
  int max_iterations = 100;
  int pca_components = 50;
  // PCA engages only when vector_size exceeds this.
  int pca_activation_dim = 50;
  // vector_size and seed above override the matching fields here.
  EmbeddingConfig embedding;

  std::filesystem::path dataset;  // a build-dataset output, or
  std::filesystem::path vulnerable_dir;  // ... these two directories
  std::filesystem::path clean_dir;
  double vulnerable_fraction = 0.3;
  std::filesystem::path workdir = "work";

  EmbeddingConfig resolved_embedding() const;
  std::filesystem::path stage_dir() const;
  void validate() const;
};

// Per-kind clustering defaults (vector size, TF-IDF threshold, k).
PipelineConfig default_config(VulnerabilityKind kind);

// Missing fields fall back to default_config(vulnerability); the workdir
// falls back to $ETHCLUSTER_WORKDIR, then "work".
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);

// Frozen artifacts of one trained detector.
struct PipelineModel {
  PipelineConfig config;
  KeywordVectorMap keywords;
  std::optional<PcaBasis> pca;
  ClusterModel clusters;
};

nlohmann::json model_to_json(const PipelineModel& model);
PipelineModel model_from_json(const nlohmann::json& j);
void save_pipeline_model(const PipelineModel& model, const std::filesystem::path& path);
// Throws Error(ModelNotFound) when the file is missing.
PipelineModel load_pipeline_model(const std::filesystem::path& path);

nlohmann::json keywords_to_json(const KeywordVectorMap& map);
KeywordVectorMap keywords_from_json(const nlohmann::json& j);

nlohmann::json metrics_to_json(const MetricsReport& report);
nlohmann::json report_to_json(VulnerabilityKind kind, const ConfusionMatrix& cm,
                              const MetricsReport& report, const nlohmann::json& params);

// Dataset named by the config: the dataset file when set, otherwise a fresh
// mix of the two directories.
Dataset load_corpus(const PipelineConfig& config);

// Applies PCA when the vector width exceeds the activation threshold.
std::optional<PcaBasis> maybe_fit_pca(const Matrix& X, int activation_dim, int components);

// Fits clusters on document vectors and labels them from `truth`.
PipelineModel fit_pipeline_model(const PipelineConfig& config,
                                 const std::vector<std::vector<double>>& vectors,
                                 std::span<const Label> truth, KeywordVectorMap keywords);

struct PipelineResult {
  ConfusionMatrix confusion;
  MetricsReport metrics;
  std::filesystem::path stage_dir;
};

// preprocess -> detect -> embed -> vectorize -> (PCA) -> cluster -> label ->
// evaluate. Every stage writes <workdir>/<vulnerability>/<stage>.*; errors
// carry the failing stage name.
PipelineResult run_pipeline(const PipelineConfig& config);

struct ScanResult {
  VulnerabilityKind kind;
  Label label;
  std::optional<int> regex_flag;  // absent for kinds without a pattern
};

ScanResult scan(const PipelineModel& model, std::string_view contract_source);
nlohmann::json scan_to_json(const ScanResult& result);

// Label of every contract in `dataset` under `model`, in dataset order.
std::vector<Label> predict_dataset(const PipelineModel& model, const Dataset& dataset);

}  // namespace ethcluster
