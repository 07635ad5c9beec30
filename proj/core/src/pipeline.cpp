#include "ethcluster/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ethcluster/error.hpp"

namespace ethcluster {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::PathError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::PathError, "write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(1) + "\n"); }

json read_json(const fs::path& path, ErrorCode missing) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(missing, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  json j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::FormatError, "not valid JSON: " + path.string());
  return j;
}

// Runs one stage, tagging any failure with the stage name.
template <typename F>
auto run_stage(const std::string& stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.code(), stage, e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, stage, e.what());
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::PathError, stage, e.what());
  }
}

json vector_json(std::span<const double> v) { return json(std::vector<double>(v.begin(), v.end())); }

json matrix_rows_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_rows(const json& rows) {
  std::vector<std::vector<double>> v = rows.get<std::vector<std::vector<double>>>();
  return to_matrix(v);
}

json optional_percentage(const std::optional<Percentage>& p) {
  if (!p) return nullptr;
  return p->rounded;
}

}  // namespace

// --- config ----------------------------------------------------------------

PipelineConfig default_config(VulnerabilityKind kind) {
  PipelineConfig c;
  c.vulnerability = kind;
  switch (kind) {
    case VulnerabilityKind::reentrancy:
      c.vector_size = 10, c.tfidf_threshold = 0.7, c.num_clusters = 5;
      break;
    case VulnerabilityKind::access_control:
      c.vector_size = 50, c.tfidf_threshold = 0.3, c.num_clusters = 3;
      break;
    case VulnerabilityKind::timestamp:
      c.vector_size = 300, c.tfidf_threshold = 0.7, c.num_clusters = 6;
      break;
    case VulnerabilityKind::tx_origin:
      c.vector_size = 300, c.tfidf_threshold = 0.7, c.num_clusters = 6;
      break;
    case VulnerabilityKind::unchecked_call:
      c.vector_size = 100, c.tfidf_threshold = 0.7, c.num_clusters = 8;
      break;
  }
  if (const char* wd = std::getenv("ETHCLUSTER_WORKDIR"); wd != nullptr && *wd != '\0') c.workdir = wd;
  return c;
}

EmbeddingConfig PipelineConfig::resolved_embedding() const {
  EmbeddingConfig e = embedding;
  e.vector_size = vector_size;
  e.seed = seed;
  return e;
}

fs::path PipelineConfig::stage_dir() const { return workdir / std::string(to_string(vulnerability)); }

void PipelineConfig::validate() const {
  if (vector_size < 1 || num_clusters < 1 || max_iterations < 1 || pca_components < 1 ||
      pca_activation_dim < 1 || !(tfidf_threshold >= 0.0 && tfidf_threshold <= 1.0) ||
      !(vulnerable_fraction > 0.0 && vulnerable_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidInput, "invalid pipeline configuration");
  }
  resolved_embedding().validate();
}

PipelineConfig config_from_json(const json& j) {
  try {
    const auto kind = parse_kind(j.at("vulnerability").get<std::string>());
    PipelineConfig c = default_config(kind);
    c.vector_size = j.value("vector_size", c.vector_size);
    c.tfidf_threshold = j.value("tfidf_threshold", c.tfidf_threshold);
    c.num_clusters = j.value("num_clusters", c.num_clusters);
    c.seed = j.value("seed", c.seed);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.pca_components = j.value("pca_components", c.pca_components);
    c.pca_activation_dim = j.value("pca_activation_dim", c.pca_activation_dim);
    c.vulnerable_fraction = j.value("vulnerable_fraction", c.vulnerable_fraction);
    if (j.contains("embedding")) {
      const auto& e = j["embedding"];
      c.embedding.window = e.value("window", c.embedding.window);
      c.embedding.epochs = e.value("epochs", c.embedding.epochs);
      c.embedding.sg = e.value("sg", c.embedding.sg);
      c.embedding.min_count = e.value("min_count", c.embedding.min_count);
      c.embedding.negative = e.value("negative", c.embedding.negative);
      c.embedding.workers = e.value("workers", c.embedding.workers);
      c.embedding.initial_learning_rate =
          e.value("initial_learning_rate", c.embedding.initial_learning_rate);
      c.embedding.min_learning_rate = e.value("min_learning_rate", c.embedding.min_learning_rate);
    }
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      c.dataset = p.value("dataset", c.dataset.string());
      c.vulnerable_dir = p.value("vulnerable_dir", c.vulnerable_dir.string());
      c.clean_dir = p.value("clean_dir", c.clean_dir.string());
      c.workdir = p.value("workdir", c.workdir.string());
    }
    c.embedding.vector_size = c.vector_size;
    c.embedding.seed = c.seed;
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad pipeline config: ") + e.what());
  }
}

json config_to_json(const PipelineConfig& c) {
  const auto e = c.resolved_embedding();
  return json{{"vulnerability", to_string(c.vulnerability)},
              {"vector_size", c.vector_size},
              {"tfidf_threshold", c.tfidf_threshold},
              {"num_clusters", c.num_clusters},
              {"seed", c.seed},
              {"max_iterations", c.max_iterations},
              {"pca_components", c.pca_components},
              {"pca_activation_dim", c.pca_activation_dim},
              {"vulnerable_fraction", c.vulnerable_fraction},
              {"embedding",
               {{"window", e.window},
                {"epochs", e.epochs},
                {"sg", e.sg},
                {"min_count", e.min_count},
                {"negative", e.negative},
                {"workers", e.workers},
                {"initial_learning_rate", e.initial_learning_rate},
                {"min_learning_rate", e.min_learning_rate}}},
              {"paths",
               {{"dataset", c.dataset.generic_string()},
                {"vulnerable_dir", c.vulnerable_dir.generic_string()},
                {"clean_dir", c.clean_dir.generic_string()},
                {"workdir", c.workdir.generic_string()}}}};
}

PipelineConfig load_config(const fs::path& path) {
  return config_from_json(read_json(path, ErrorCode::PathError));
}

// --- artifacts -------------------------------------------------------------

json keywords_to_json(const KeywordVectorMap& map) {
  json j = json::object();
  for (const auto& [word, vec] : map) j[word] = vec;
  return j;
}

KeywordVectorMap keywords_from_json(const json& j) {
  KeywordVectorMap map;
  for (const auto& [word, vec] : j.items()) map.emplace(word, vec.get<std::vector<double>>());
  return map;
}

json model_to_json(const PipelineModel& m) {
  json pca = nullptr;
  if (m.pca) {
    pca = json{{"mean", vector_json({m.pca->mean.data(), static_cast<std::size_t>(m.pca->mean.size())})},
               {"components", matrix_rows_json(m.pca->components)}};
  }
  json labels = json::array();
  for (auto l : m.clusters.labels) labels.push_back(to_string(l));
  return json{{"format", "ethcluster-model"},
              {"version", 1},
              {"config", config_to_json(m.config)},
              {"keywords", keywords_to_json(m.keywords)},
              {"pca", pca},
              {"clusters",
               {{"k", m.clusters.k()},
                {"centers", matrix_rows_json(m.clusters.centers)},
                {"labels", labels},
                {"assignments", m.clusters.assignments},
                {"seed", m.clusters.seed},
                {"max_iterations", m.clusters.max_iterations},
                {"iterations_run", m.clusters.iterations_run}}}};
}

PipelineModel model_from_json(const json& j) {
  try {
    if (j.value("format", "") != "ethcluster-model") {
      throw Error(ErrorCode::FormatError, "not a pipeline model");
    }
    if (j.at("version").get<int>() != 1) throw Error(ErrorCode::VersionError, "unsupported model version");
    PipelineModel m;
    m.config = config_from_json(j.at("config"));
    m.keywords = keywords_from_json(j.at("keywords"));
    if (!j.at("pca").is_null()) {
      const auto& p = j["pca"];
      PcaBasis basis;
      const auto mean = p.at("mean").get<std::vector<double>>();
      basis.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
      basis.components = matrix_from_rows(p.at("components"));
      m.pca = std::move(basis);
    }
    const auto& c = j.at("clusters");
    m.clusters.centers = matrix_from_rows(c.at("centers"));
    for (const auto& l : c.at("labels")) {
      auto label = parse_label(l.get<std::string>());
      if (!label) throw Error(ErrorCode::FormatError, "bad cluster label");
      m.clusters.labels.push_back(*label);
    }
    m.clusters.assignments = c.at("assignments").get<std::vector<int>>();
    m.clusters.seed = c.at("seed").get<std::int64_t>();
    m.clusters.max_iterations = c.at("max_iterations").get<int>();
    m.clusters.iterations_run = c.at("iterations_run").get<int>();
    if (m.clusters.k() != c.at("k").get<int>()) throw Error(ErrorCode::FormatError, "center count mismatch");
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad pipeline model: ") + e.what());
  }
}

void save_pipeline_model(const PipelineModel& model, const fs::path& path) {
  write_json(path, model_to_json(model));
}

PipelineModel load_pipeline_model(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::ModelNotFound, "no trained model at " + path.string());
  return model_from_json(read_json(path, ErrorCode::ModelNotFound));
}

json metrics_to_json(const MetricsReport& r) {
  return json{{"accuracy", optional_percentage(r.accuracy)},
              {"precision", optional_percentage(r.precision)},
              {"recall", optional_percentage(r.recall)},
              {"f_measure", optional_percentage(r.f_measure)}};
}

json report_to_json(VulnerabilityKind kind, const ConfusionMatrix& cm, const MetricsReport& r,
                    const json& params) {
  return json{{"kind", to_string(kind)},
              {"confusion", {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}}},
              {"metrics", metrics_to_json(r)},
              {"params", params}};
}

// --- stages ----------------------------------------------------------------

Dataset load_corpus(const PipelineConfig& config) {
  if (!config.dataset.empty()) {
    if (!fs::exists(config.dataset)) {
      throw Error(ErrorCode::PathError, "dataset not found: " + config.dataset.string());
    }
    return load_dataset(config.dataset);
  }
  if (config.vulnerable_dir.empty() || config.clean_dir.empty()) {
    throw Error(ErrorCode::PathError, "config names neither a dataset nor corpus directories");
  }
  for (const auto& dir : {config.vulnerable_dir, config.clean_dir}) {
    if (!fs::is_directory(dir)) throw Error(ErrorCode::PathError, "corpus directory not found: " + dir.string());
  }
  const auto vulnerable = load_records(config.vulnerable_dir);
  const auto clean = load_records(config.clean_dir);
  return build_mixed_dataset(vulnerable, clean, config.vulnerable_fraction);
}

std::optional<PcaBasis> maybe_fit_pca(const Matrix& X, int activation_dim, int components) {
  if (X.cols() <= activation_dim) return std::nullopt;
  const auto usable = std::min<Eigen::Index>({static_cast<Eigen::Index>(components), X.rows(), X.cols()});
  return pca_fit(X, usable);
}

PipelineModel fit_pipeline_model(const PipelineConfig& config,
                                 const std::vector<std::vector<double>>& vectors,
                                 std::span<const Label> truth, KeywordVectorMap keywords) {
  PipelineModel m;
  m.config = config;
  m.keywords = std::move(keywords);
  Matrix X = to_matrix(vectors);
  m.pca = maybe_fit_pca(X, config.pca_activation_dim, config.pca_components);
  if (m.pca) X = pca_transform(*m.pca, X);
  m.clusters = kmeans_fit(X, config.num_clusters, config.max_iterations, config.seed);
  label_clusters(m.clusters, truth);
  return m;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  run_stage("config", [&] { config.validate(); });
  const fs::path dir = config.stage_dir();
  const auto kind = config.vulnerability;

  const Dataset dataset = run_stage("load", [&] { return load_corpus(config); });
  run_stage("load", [&] { fs::create_directories(dir); });
  const auto truth = dataset.truth_labels();

  std::vector<TokenDoc> docs;
  std::vector<std::vector<std::string>> tokens;
  run_stage("preprocess", [&] {
    json out = json::array();
    for (const auto& e : dataset.entries) {
      auto doc = preprocess_contract(e.record.source);
      doc.contract_hash = e.record.source_hash;
      out.push_back({{"contract_hash", doc.contract_hash},
                     {"label", to_string(e.truth)},
                     {"tokens", doc.tokens},
                     {"lines", doc.lines}});
      tokens.push_back(doc.tokens);
      docs.push_back(std::move(doc));
    }
    write_json(dir / "preprocess.json", out);
  });

  std::vector<KindFlags> flags;
  run_stage("detect", [&] {
    if (!has_pattern(kind)) return;
    flags.push_back(scan_corpus(docs, kind));
    json hashes = json::array();
    for (const auto& d : docs) hashes.push_back(d.contract_hash);
    write_json(dir / "detect.json",
               json{{"kind", to_string(kind)}, {"contract_hashes", hashes}, {"flags", flags[0].flags}});
  });

  const EmbeddingModel embedding = run_stage("embed", [&] {
    auto model = train_embedding(tokens, config.resolved_embedding());
    save_model(model, dir / "embed.vec");
    return model;
  });

  std::vector<std::vector<double>> vectors;
  KeywordVectorMap keywords;
  run_stage("vectorize", [&] {
    TfidfModel tfidf(Dictionary::build(tokens));
    std::vector<Bag> bags;
    bags.reserve(tokens.size());
    for (const auto& t : tokens) bags.push_back(tfidf.dictionary().doc2bow(t));
    keywords = select_keywords(bags, tfidf, embedding, config.tfidf_threshold, flags);
    vectors = document_vectors(tokens, keywords, static_cast<std::size_t>(config.vector_size));
    json out = json::array();
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      out.push_back({{"contract_hash", docs[i].contract_hash}, {"values", vectors[i]}});
    }
    write_json(dir / "vectorize.json", out);
    write_json(dir / "keywords.json", keywords_to_json(keywords));
  });

  const PipelineModel model = run_stage("cluster", [&] {
    auto m = fit_pipeline_model(config, vectors, truth, keywords);
    save_pipeline_model(m, dir / "model.json");
    return m;
  });

  return run_stage("evaluate", [&] {
    std::vector<Label> predicted;
    predicted.reserve(truth.size());
    for (int a : model.clusters.assignments) predicted.push_back(model.clusters.labels[static_cast<std::size_t>(a)]);
    PipelineResult result{confusion(predicted, truth), {}, dir};
    result.metrics = metrics(result.confusion);
    write_json(dir / "report.json",
               report_to_json(kind, result.confusion, result.metrics, config_to_json(config)));
    const ReportRow row{kind, result.confusion, result.metrics};
    write_text(dir / "report.txt", format_report_table(std::span(&row, 1)));

    if (vectors.size() >= 2) {
      Matrix X = to_matrix(vectors);
      if (model.pca) X = pca_transform(*model.pca, X);
      write_text(dir / "points.csv",
                 points_csv(project2d(X, model.clusters.assignments, model.clusters.labels)));
    }
    return result;
  });
}

ScanResult scan(const PipelineModel& model, std::string_view contract_source) {
  const auto doc = preprocess_contract(contract_source);
  const auto values = document_vector(doc.tokens, model.keywords,
                                      static_cast<std::size_t>(model.config.vector_size));
  const Vector v = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  ScanResult r{model.config.vulnerability, predict(model.clusters, model.pca, v), std::nullopt};
  if (has_pattern(r.kind)) r.regex_flag = detect(r.kind, doc.lines);
  return r;
}

json scan_to_json(const ScanResult& r) {
  json j{{"kind", to_string(r.kind)}, {"label", to_string(r.label)}};
  if (r.regex_flag) j["regex"] = {{"pattern", to_string(r.kind)}, {"flag", *r.regex_flag}};
  return j;
}

std::vector<Label> predict_dataset(const PipelineModel& model, const Dataset& dataset) {
  std::vector<Label> out;
  out.reserve(dataset.entries.size());
  for (const auto& e : dataset.entries) out.push_back(scan(model, e.record.source).label);
  return out;
}

}  // namespace ethcluster
