#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ethcluster {

struct EmbeddingConfig {
  int vector_size = 100;
  int window = 5;
  int min_count = 1;
  int workers = 1;
  int sg = 1;  // 0 = CBOW, 1 = skip-gram
  int epochs = 5;
  std::int64_t seed = 1194;
  int negative = 5;
  double initial_learning_rate = 0.025;
  double min_learning_rate = 1e-4;

  // Throws Error(InvalidInput) on out-of-range fields.
  void validate() const;

  bool operator==(const EmbeddingConfig&) const = default;
};

// Immutable word -> vector table. Safe to share across threads.
class EmbeddingModel {
 public:
  EmbeddingModel(EmbeddingConfig config, std::vector<std::string> words,
                 std::vector<double> vectors);

  // Absent words yield nullopt; callers skip them.
  std::optional<std::span<const double>> vector(std::string_view word) const;
  bool contains(std::string_view word) const { return index_.contains(std::string(word)); }

  const std::vector<std::string>& words() const noexcept { return words_; }
  // Row-major |vocab| x dim.
  const std::vector<double>& vectors() const noexcept { return vectors_; }
  const EmbeddingConfig& config() const noexcept { return config_; }
  std::size_t size() const noexcept { return words_.size(); }
  int dim() const noexcept { return config_.vector_size; }

  bool operator==(const EmbeddingModel& other) const {
    return config_ == other.config_ && words_ == other.words_ && vectors_ == other.vectors_;
  }

 private:
  EmbeddingConfig config_;
  std::vector<std::string> words_;
  std::vector<double> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Word2vec with negative sampling. With workers == 1 the result is fully
// determined by (docs, config). With more workers, updates race (hogwild)
// and runs are not reproducible.
EmbeddingModel train_embedding(std::span<const std::vector<std::string>> docs,
                               const EmbeddingConfig& config);

// Negative-sampling objective for one training example: `hidden` predicts
// output row 0 (the true target) against output rows 1.. (noise words):
//   -log s(u0.h) - sum_k log s(-uk.h)
// `outputs` is row-major, rows x hidden.size().
double negative_sampling_loss(std::span<const double> hidden, std::span<const double> outputs);

struct NegativeSamplingGradient {
  std::vector<double> hidden;
  std::vector<double> outputs;  // same layout as the outputs argument
};

NegativeSamplingGradient negative_sampling_gradient(std::span<const double> hidden,
                                                    std::span<const double> outputs);

inline constexpr int kModelFormatVersion = 1;

void save_model(const EmbeddingModel& model, const std::filesystem::path& path);
// Throws Error(FormatError) on malformed input, Error(VersionError) on an
// unknown format version.
EmbeddingModel load_model(const std::filesystem::path& path);

}  // namespace ethcluster
