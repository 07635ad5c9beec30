#include "ethcluster/embed.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "ethcluster/error.hpp"

namespace ethcluster {

namespace {

using Rng = std::mt19937_64;

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

// d/df of -log s(f) for the target (label 1) or -log s(-f) for noise (label 0).
double ns_coefficient(double f, double label) { return sigmoid(f) - label; }

double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

struct Vocab {
  std::vector<std::string> words;
  std::vector<std::uint64_t> counts;
  std::unordered_map<std::string, std::uint32_t> index;
};

Vocab build_vocab(std::span<const std::vector<std::string>> docs, int min_count) {
  struct Seen {
    std::uint64_t count = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string, Seen> seen;
  std::size_t position = 0;
  for (const auto& doc : docs) {
    for (const auto& w : doc) {
      auto [it, inserted] = seen.try_emplace(w, Seen{0, position});
      ++it->second.count;
      ++position;
    }
  }
  std::vector<std::pair<std::string, Seen>> kept;
  for (auto& [w, s] : seen) {
    if (s.count >= static_cast<std::uint64_t>(std::max(min_count, 0))) kept.emplace_back(w, s);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.second.first < b.second.first;
  });
  Vocab v;
  for (auto& [w, s] : kept) {
    v.index.emplace(w, static_cast<std::uint32_t>(v.words.size()));
    v.words.push_back(w);
    v.counts.push_back(s.count);
  }
  return v;
}

class Trainer {
 public:
  Trainer(const EmbeddingConfig& cfg, const Vocab& vocab, std::vector<double>& syn0,
          std::vector<double>& syn1, bool concurrent)
      : cfg_(cfg), dim_(cfg.vector_size), syn0_(syn0), syn1_(syn1), concurrent_(concurrent) {
    noise_.reserve(vocab.counts.size());
    double total = 0.0;
    for (auto c : vocab.counts) {
      total += std::pow(static_cast<double>(c), 0.75);
      noise_.push_back(total);
    }
  }

  // Trains on docs[begin, end) for every epoch. `progress` counts processed
  // words across all workers for the learning-rate schedule.
  void run(std::span<const std::vector<std::uint32_t>> docs, std::uint64_t total_words,
           Rng& rng, std::atomic<std::uint64_t>& progress) {
    std::vector<double> hidden(dim_), grad(dim_), row(dim_);
    const double span_words = static_cast<double>(total_words) * cfg_.epochs;
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      for (const auto& doc : docs) {
        for (std::size_t i = 0; i < doc.size(); ++i) {
          const auto done = progress.fetch_add(1, std::memory_order_relaxed);
          const double lr = std::max(
              cfg_.min_learning_rate,
              cfg_.initial_learning_rate -
                  (cfg_.initial_learning_rate - cfg_.min_learning_rate) *
                      (static_cast<double>(done) / span_words));
          const auto reduced = static_cast<std::ptrdiff_t>(uniform_index(rng, cfg_.window));
          const std::ptrdiff_t reach = cfg_.window - reduced;
          const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(i) - reach);
          const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(doc.size()) - 1,
                                                   static_cast<std::ptrdiff_t>(i) + reach);
          if (cfg_.sg == 1) {
            for (auto j = lo; j <= hi; ++j) {
              if (j == static_cast<std::ptrdiff_t>(i)) continue;
              double* in = &syn0_[static_cast<std::size_t>(doc[j]) * dim_];
              load(hidden.data(), in);
              std::fill(grad.begin(), grad.end(), 0.0);
              update_outputs(hidden.data(), doc[i], rng, lr, grad.data(), row.data());
              for (int d = 0; d < dim_; ++d) hidden[d] -= lr * grad[d];
              store(in, hidden.data());
            }
          } else {
            std::fill(hidden.begin(), hidden.end(), 0.0);
            int count = 0;
            for (auto j = lo; j <= hi; ++j) {
              if (j == static_cast<std::ptrdiff_t>(i)) continue;
              load(row.data(), &syn0_[static_cast<std::size_t>(doc[j]) * dim_]);
              for (int d = 0; d < dim_; ++d) hidden[d] += row[d];
              ++count;
            }
            if (count == 0) continue;
            for (auto& h : hidden) h /= count;
            std::fill(grad.begin(), grad.end(), 0.0);
            update_outputs(hidden.data(), doc[i], rng, lr, grad.data(), row.data());
            // Full error to every context word, as in the reference word2vec.
            for (auto j = lo; j <= hi; ++j) {
              if (j == static_cast<std::ptrdiff_t>(i)) continue;
              double* in = &syn0_[static_cast<std::size_t>(doc[j]) * dim_];
              load(row.data(), in);
              for (int d = 0; d < dim_; ++d) row[d] -= lr * grad[d];
              store(in, row.data());
            }
          }
        }
      }
    }
  }

 private:
  // One SGD step on the output rows for `hidden` predicting `target`; the
  // gradient with respect to `hidden` is accumulated into `grad`.
  void update_outputs(const double* hidden, std::uint32_t target, Rng& rng, double lr,
                      double* grad, double* row) {
    for (int k = 0; k <= cfg_.negative; ++k) {
      std::uint32_t word = target;
      double label = 1.0;
      if (k > 0) {
        word = sample_noise(rng);
        if (word == target) continue;
        label = 0.0;
      }
      double* out = &syn1_[static_cast<std::size_t>(word) * dim_];
      load(row, out);
      const double g = ns_coefficient(dot(row, hidden, dim_), label);
      for (int d = 0; d < dim_; ++d) {
        grad[d] += g * row[d];
        row[d] -= lr * g * hidden[d];
      }
      store(out, row);
    }
  }

  std::uint32_t sample_noise(Rng& rng) const {
    const double r = uniform01(rng) * noise_.back();
    auto it = std::upper_bound(noise_.begin(), noise_.end(), r);
    if (it == noise_.end()) --it;
    return static_cast<std::uint32_t>(it - noise_.begin());
  }

  void load(double* dst, double* src) const {
    if (!concurrent_) {
      std::memcpy(dst, src, sizeof(double) * dim_);
      return;
    }
    for (int d = 0; d < dim_; ++d) dst[d] = std::atomic_ref<double>(src[d]).load(std::memory_order_relaxed);
  }

  void store(double* dst, const double* src) const {
    if (!concurrent_) {
      std::memcpy(dst, src, sizeof(double) * dim_);
      return;
    }
    for (int d = 0; d < dim_; ++d) std::atomic_ref<double>(dst[d]).store(src[d], std::memory_order_relaxed);
  }

  const EmbeddingConfig& cfg_;
  int dim_;
  std::vector<double>& syn0_;
  std::vector<double>& syn1_;
  bool concurrent_;
  std::vector<double> noise_;
};

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

void EmbeddingConfig::validate() const {
  if (vector_size < 1 || window < 1 || epochs < 1 || workers < 1 || min_count < 0 ||
      negative < 0 || (sg != 0 && sg != 1) || !(initial_learning_rate > 0.0) ||
      min_learning_rate < 0.0) {
    throw Error(ErrorCode::InvalidInput, "invalid embedding configuration");
  }
}

EmbeddingModel::EmbeddingModel(EmbeddingConfig config, std::vector<std::string> words,
                               std::vector<double> vectors)
    : config_(config), words_(std::move(words)), vectors_(std::move(vectors)) {
  if (vectors_.size() != words_.size() * static_cast<std::size_t>(config_.vector_size)) {
    throw Error(ErrorCode::DimError, "embedding matrix does not match vocabulary size");
  }
  for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], i);
}

std::optional<std::span<const double>> EmbeddingModel::vector(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  const auto dim = static_cast<std::size_t>(config_.vector_size);
  return std::span<const double>(vectors_).subspan(it->second * dim, dim);
}

EmbeddingModel train_embedding(std::span<const std::vector<std::string>> docs,
                               const EmbeddingConfig& config) {
  config.validate();
  const Vocab vocab = build_vocab(docs, config.min_count);
  if (vocab.words.empty()) throw Error(ErrorCode::EmptyVocab, "no word meets min_count");

  std::vector<std::vector<std::uint32_t>> encoded;
  encoded.reserve(docs.size());
  std::uint64_t total_words = 0;
  for (const auto& doc : docs) {
    std::vector<std::uint32_t> ids;
    ids.reserve(doc.size());
    for (const auto& w : doc) {
      if (auto it = vocab.index.find(w); it != vocab.index.end()) ids.push_back(it->second);
    }
    total_words += ids.size();
    encoded.push_back(std::move(ids));
  }

  const int dim = config.vector_size;
  std::vector<double> syn0(vocab.words.size() * dim);
  std::vector<double> syn1(vocab.words.size() * dim, 0.0);
  Rng init_rng(static_cast<std::uint64_t>(config.seed));
  for (auto& x : syn0) x = (uniform01(init_rng) - 0.5) / dim;

  const bool concurrent = config.workers > 1 && encoded.size() > 1;
  Trainer trainer(config, vocab, syn0, syn1, concurrent);
  std::atomic<std::uint64_t> progress{0};
  if (!concurrent) {
    Rng rng(static_cast<std::uint64_t>(config.seed) ^ 0x9e3779b97f4a7c15ULL);
    trainer.run(encoded, total_words, rng, progress);
  } else {
    const auto workers = std::min<std::size_t>(config.workers, encoded.size());
    std::vector<std::thread> threads;
    const std::span<const std::vector<std::uint32_t>> all(encoded);
    for (std::size_t w = 0; w < workers; ++w) {
      const auto begin = all.size() * w / workers;
      const auto end = all.size() * (w + 1) / workers;
      threads.emplace_back([&, w, begin, end] {
        Rng rng(static_cast<std::uint64_t>(config.seed) ^ (0x9e3779b97f4a7c15ULL + w));
        trainer.run(all.subspan(begin, end - begin), total_words, rng, progress);
      });
    }
    for (auto& t : threads) t.join();
  }

  return EmbeddingModel(config, vocab.words, std::move(syn0));
}

double negative_sampling_loss(std::span<const double> hidden, std::span<const double> outputs) {
  const auto dim = hidden.size();
  if (dim == 0 || outputs.size() % dim != 0 || outputs.empty()) {
    throw Error(ErrorCode::DimError, "outputs must be a non-empty multiple of the hidden size");
  }
  const auto rows = outputs.size() / dim;
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double f = dot(&outputs[r * dim], hidden.data(), static_cast<int>(dim));
    loss -= r == 0 ? log_sigmoid(f) : log_sigmoid(-f);
  }
  return loss;
}

NegativeSamplingGradient negative_sampling_gradient(std::span<const double> hidden,
                                                    std::span<const double> outputs) {
  const auto dim = hidden.size();
  if (dim == 0 || outputs.size() % dim != 0 || outputs.empty()) {
    throw Error(ErrorCode::DimError, "outputs must be a non-empty multiple of the hidden size");
  }
  const auto rows = outputs.size() / dim;
  NegativeSamplingGradient g{std::vector<double>(dim, 0.0), std::vector<double>(outputs.size())};
  for (std::size_t r = 0; r < rows; ++r) {
    const double* u = &outputs[r * dim];
    const double c = ns_coefficient(dot(u, hidden.data(), static_cast<int>(dim)), r == 0 ? 1.0 : 0.0);
    for (std::size_t d = 0; d < dim; ++d) {
      g.hidden[d] += c * u[d];
      g.outputs[r * dim + d] = c * hidden[d];
    }
  }
  return g;
}

void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::PathError, "cannot write " + path.string());
  const auto& c = model.config();
  out << "ethcluster-word2vec " << kModelFormatVersion << ' ' << model.dim() << ' ' << model.size()
      << ' ' << c.window << ' ' << c.min_count << ' ' << c.workers << ' ' << c.sg << ' '
      << c.epochs << ' ' << c.seed << ' ' << c.negative << ' '
      << format_double(c.initial_learning_rate) << ' ' << format_double(c.min_learning_rate)
      << '\n';
  const auto& vecs = model.vectors();
  const auto dim = static_cast<std::size_t>(model.dim());
  for (std::size_t i = 0; i < model.size(); ++i) {
    out << model.words()[i];
    for (std::size_t d = 0; d < dim; ++d) out << ' ' << format_double(vecs[i * dim + d]);
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::PathError, "write failed: " + path.string());
}

namespace {

template <typename T>
T parse_number(std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::FormatError, "bad number '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= line.size()) {
    auto end = line.find(' ', start);
    if (end == std::string_view::npos) end = line.size();
    if (end > start) out.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

}  // namespace

EmbeddingModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::PathError, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::FormatError, "empty model file");
  const auto header = split_spaces(line);
  if (header.empty() || header[0] != "ethcluster-word2vec") {
    throw Error(ErrorCode::FormatError, "not an embedding model file");
  }
  if (header.size() < 2 || parse_number<int>(header[1]) != kModelFormatVersion) {
    throw Error(ErrorCode::VersionError, "unsupported model format version");
  }
  if (header.size() != 13) throw Error(ErrorCode::FormatError, "malformed model header");
  EmbeddingConfig c;
  c.vector_size = parse_number<int>(header[2]);
  const auto vocab_size = parse_number<std::size_t>(header[3]);
  c.window = parse_number<int>(header[4]);
  c.min_count = parse_number<int>(header[5]);
  c.workers = parse_number<int>(header[6]);
  c.sg = parse_number<int>(header[7]);
  c.epochs = parse_number<int>(header[8]);
  c.seed = parse_number<std::int64_t>(header[9]);
  c.negative = parse_number<int>(header[10]);
  c.initial_learning_rate = parse_number<double>(header[11]);
  c.min_learning_rate = parse_number<double>(header[12]);
  try {
    c.validate();
  } catch (const Error&) {
    throw Error(ErrorCode::FormatError, "model header holds an invalid configuration");
  }

  const auto dim = static_cast<std::size_t>(c.vector_size);
  std::vector<std::string> words;
  std::vector<double> vectors;
  words.reserve(vocab_size);
  vectors.reserve(vocab_size * dim);
  for (std::size_t i = 0; i < vocab_size; ++i) {
    if (!std::getline(in, line)) throw Error(ErrorCode::FormatError, "model file is truncated");
    const auto fields = split_spaces(line);
    if (fields.size() != dim + 1) throw Error(ErrorCode::FormatError, "model row has wrong width");
    words.emplace_back(fields[0]);
    for (std::size_t d = 0; d < dim; ++d) {
      const double v = parse_number<double>(fields[d + 1]);
      if (!std::isfinite(v)) throw Error(ErrorCode::FormatError, "non-finite vector value");
      vectors.push_back(v);
    }
  }
  return EmbeddingModel(c, std::move(words), std::move(vectors));
}

}  // namespace ethcluster
