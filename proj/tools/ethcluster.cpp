#include <CLI11.hpp>

#include <atomic>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ethcluster/cluster.hpp"
#include "ethcluster/detect.hpp"
#include "ethcluster/embed.hpp"
#include "ethcluster/error.hpp"
#include "ethcluster/evaluate.hpp"
#include "ethcluster/ingest.hpp"
#include "ethcluster/pipeline.hpp"
#include "ethcluster/preprocess.hpp"
#include "ethcluster/vectorize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ethcluster;

namespace {

std::string read_text(const fs::path& path, ErrorCode missing = ErrorCode::PathError) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(missing, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::PathError, "cannot write " + path.string());
  out << text;
}

json read_json(const fs::path& path) {
  json j = json::parse(read_text(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::FormatError, "not valid JSON: " + path.string());
  return j;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(1) + "\n"); }

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto nl = text.find('\n', start);
    if (nl == std::string::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
}

std::string join_lines(const std::vector<std::string>& lines, bool trailing) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out += lines[i];
    if (trailing || i + 1 < lines.size()) out += '\n';
  }
  return out;
}

// A corpus source: a dataset file, a store directory or a directory of .sol
// files. Labels are only known for datasets.
struct Source {
  ContractRecord record;
  std::optional<Label> label;
};

std::vector<Source> load_sources(const fs::path& in) {
  std::vector<Source> out;
  if (fs::is_regular_file(in)) {
    for (auto& e : load_dataset(in).entries) out.push_back({std::move(e.record), e.truth});
    return out;
  }
  if (!fs::is_directory(in)) throw Error(ErrorCode::PathError, "input not found: " + in.string());
  for (auto& r : load_records(in)) out.push_back({std::move(r), std::nullopt});
  return out;
}

// Output of `preprocess`: token files plus manifest.json.
struct TokenCorpus {
  std::vector<std::string> hashes;
  std::vector<std::vector<std::string>> tokens;
  std::vector<std::vector<std::string>> lines;
  std::vector<std::optional<Label>> labels;
};

TokenCorpus load_token_dir(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.json";
  if (!fs::exists(manifest)) throw Error(ErrorCode::PathError, "no manifest.json in " + dir.string());
  TokenCorpus c;
  const json j = read_json(manifest);
  for (const auto& d : j.at("documents")) {
    c.hashes.push_back(d.at("contract_hash").get<std::string>());
    auto words = split_lines(read_text(dir / d.at("tokens_file").get<std::string>()));
    if (!words.empty() && words.back().empty()) words.pop_back();
    c.tokens.push_back(std::move(words));
    c.lines.push_back(split_lines(read_text(dir / d.at("lines_file").get<std::string>())));
    const auto& l = d.at("label");
    std::optional<Label> label;
    if (!l.is_null()) {
      label = parse_label(l.get<std::string>());
      if (!label) throw Error(ErrorCode::FormatError, "unknown label in " + manifest.string());
    }
    c.labels.push_back(label);
  }
  return c;
}

// Truth labels keyed by contract hash, from a dataset file or a token dir.
std::map<std::string, Label> truth_by_hash(const fs::path& path) {
  std::map<std::string, Label> out;
  if (fs::is_directory(path)) {
    const auto c = load_token_dir(path);
    for (std::size_t i = 0; i < c.hashes.size(); ++i)
      if (c.labels[i]) out.emplace(c.hashes[i], *c.labels[i]);
  } else {
    for (const auto& e : load_dataset(path).entries) out.emplace(e.record.source_hash, e.truth);
  }
  return out;
}

struct VectorFile {
  std::vector<std::string> hashes;
  std::vector<std::vector<double>> values;
};

VectorFile load_vectors(const fs::path& path) {
  VectorFile v;
  const json j = read_json(path);
  for (const auto& e : j) {
    v.hashes.push_back(e.at("contract_hash").get<std::string>());
    v.values.push_back(e.at("values").get<std::vector<double>>());
  }
  if (v.values.empty()) throw Error(ErrorCode::InvalidInput, "no vectors in " + path.string());
  return v;
}

PipelineConfig base_config(const std::string& config_path, const std::string& kind) {
  if (!config_path.empty()) {
    auto c = load_config(config_path);
    if (!kind.empty() && parse_kind(kind) != c.vulnerability)
      throw Error(ErrorCode::InvalidInput, "--kind disagrees with the config file");
    return c;
  }
  if (kind.empty()) throw Error(ErrorCode::InvalidInput, "either --config or --kind is required");
  return default_config(parse_kind(kind));
}

[[noreturn]] void fail(const std::string& stage, ErrorCode code, const std::string& message) {
  std::cerr << json{{"error", to_string(code)}, {"stage", stage}, {"message", message}}.dump() << '\n';
  std::exit(1);
}

// --- subcommands -------------------------------------------------------------

struct IngestOpts {
  std::string chain, addresses, in, store = "store", endpoint;
  double rate = 4.0;
  int jobs = 1, retries = 3;
};

void cmd_ingest(const IngestOpts& o) {
  const Chain chain = parse_chain(o.chain);
  ContractStore store(o.store);
  json summary{{"stored", 0}, {"duplicates", 0}, {"failed", json::array()}};
  std::mutex summary_mutex;
  auto count = [&](PutResult r) {
    std::lock_guard lock(summary_mutex);
    summary[r == PutResult::Stored ? "stored" : "duplicates"] =
        summary[r == PutResult::Stored ? "stored" : "duplicates"].get<int>() + 1;
  };

  if (chain == Chain::local) {
    if (o.in.empty()) throw Error(ErrorCode::InvalidInput, "--in is required for chain local");
    for (const auto& r : load_records(o.in)) count(store.put(r));
    std::cout << summary.dump(1) << '\n';
    return;
  }
  if (o.addresses.empty()) throw Error(ErrorCode::InvalidInput, "--addresses is required");
  std::vector<std::string> addresses;
  for (auto& line : split_lines(read_text(o.addresses))) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    if (!line.empty() && line[0] != '#') addresses.push_back(line);
  }
  ExplorerClient client(endpoint_from_env(chain, o.endpoint.empty() ? std::nullopt : std::optional(o.endpoint)),
                        o.rate);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < addresses.size();) {
      const auto& addr = addresses[i];
      for (int attempt = 0;; ++attempt) {
        try {
          count(store.put(client.fetch_verified_source(addr)));
          break;
        } catch (const Error& e) {
          if (e.code() == ErrorCode::RateLimited && attempt < o.retries) {
            std::this_thread::sleep_for(std::chrono::seconds(1 << attempt));
            continue;
          }
          std::lock_guard lock(summary_mutex);
          summary["failed"].push_back({{"address", addr}, {"error", to_string(e.code())}, {"message", e.what()}});
          break;
        }
      }
    }
  };
  std::vector<std::jthread> pool;
  for (int j = 0; j < std::max(1, o.jobs); ++j) pool.emplace_back(worker);
  pool.clear();
  std::cout << summary.dump(1) << '\n';
}

void cmd_build_dataset(const std::string& vuln, const std::string& clean, double fraction, const std::string& out) {
  for (const auto& d : {vuln, clean})
    if (!fs::is_directory(d)) throw Error(ErrorCode::PathError, "corpus directory not found: " + d);
  const auto dataset = build_mixed_dataset(load_records(vuln), load_records(clean), fraction);
  save_dataset(dataset, out);
  std::cout << json{{"entries", dataset.entries.size()}, {"vulnerable", dataset.vulnerable_count()}}.dump() << '\n';
}

void cmd_preprocess(const std::string& in, const std::string& out) {
  const auto sources = load_sources(in);
  fs::create_directories(out);
  json docs = json::array();
  std::size_t unterminated = 0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& s = sources[i];
    const auto doc = preprocess_contract(s.record.source);
    unterminated += doc.unterminated_comment;
    char stem[64];
    std::snprintf(stem, sizeof(stem), "%05zu_%.16s", i, s.record.source_hash.c_str());
    write_text(fs::path(out) / (std::string(stem) + ".txt"), join_lines(doc.tokens, true));
    write_text(fs::path(out) / (std::string(stem) + ".lines"), join_lines(doc.lines, false));
    docs.push_back({{"tokens_file", std::string(stem) + ".txt"},
                    {"lines_file", std::string(stem) + ".lines"},
                    {"contract_hash", s.record.source_hash},
                    {"label", s.label ? json(to_string(*s.label)) : json(nullptr)}});
  }
  write_json(fs::path(out) / "manifest.json", {{"documents", docs}});
  std::cout << json{{"documents", sources.size()}, {"unterminated_comments", unterminated}}.dump() << '\n';
}

void cmd_detect(const std::string& kind_name, const std::string& in, const std::string& out) {
  const auto kind = parse_kind(kind_name);
  if (!has_pattern(kind)) throw Error(ErrorCode::InvalidKind, "no pattern is defined for " + kind_name);
  std::vector<std::string> hashes;
  std::vector<std::uint8_t> flags;
  if (fs::exists(fs::path(in) / "manifest.json")) {
    const auto c = load_token_dir(in);
    hashes = c.hashes;
    for (const auto& l : c.lines) flags.push_back(static_cast<std::uint8_t>(detect(kind, l)));
  } else {
    for (const auto& s : load_sources(in)) {
      hashes.push_back(s.record.source_hash);
      flags.push_back(static_cast<std::uint8_t>(detect(kind, preprocess_contract(s.record.source).lines)));
    }
  }
  write_json(out, {{"kind", to_string(kind)}, {"contract_hashes", hashes}, {"flags", flags}});
}

void cmd_train_embedding(const std::string& in, const EmbeddingConfig& cfg, const std::string& out) {
  const auto corpus = load_token_dir(in);
  save_model(train_embedding(corpus.tokens, cfg), out);
}

void cmd_vectorize(const std::string& in, const std::string& embedding_path, const std::vector<std::string>& flag_paths,
                   double threshold, const std::string& out) {
  const auto corpus = load_token_dir(in);
  const auto embedding = load_model(embedding_path);
  std::vector<KindFlags> flags;
  for (const auto& p : flag_paths) {
    const auto j = read_json(p);
    if (j.at("contract_hashes").get<std::vector<std::string>>() != corpus.hashes)
      throw Error(ErrorCode::AlignmentError, p + " does not match the token corpus order");
    flags.push_back({parse_kind(j.at("kind").get<std::string>()), j.at("flags").get<std::vector<std::uint8_t>>()});
  }
  const TfidfModel tfidf(Dictionary::build(corpus.tokens));
  std::vector<Bag> bags;
  for (const auto& t : corpus.tokens) bags.push_back(tfidf.dictionary().doc2bow(t));
  const auto keywords = select_keywords(bags, tfidf, embedding, threshold, flags);
  const auto vectors = document_vectors(corpus.tokens, keywords, static_cast<std::size_t>(embedding.dim()));
  json rows = json::array();
  for (std::size_t i = 0; i < vectors.size(); ++i)
    rows.push_back({{"contract_hash", corpus.hashes[i]}, {"values", vectors[i]}});
  write_json(out, rows);
  write_json(fs::path(out).replace_filename("keywords.json"), keywords_to_json(keywords));
}

struct ClusterOpts {
  std::string vectors, keywords, labels, kind = "reentrancy", out = "model.json";
  int k = 0, max_iter = 100, pca_threshold = 50, pca_components = 50;
  std::int64_t seed = kDefaultSeed;
  double threshold = -1.0;
};

void cmd_cluster(const ClusterOpts& o) {
  const auto v = load_vectors(o.vectors);
  auto config = default_config(parse_kind(o.kind));
  config.vector_size = static_cast<int>(v.values.front().size());
  if (o.k > 0) config.num_clusters = o.k;
  if (o.threshold >= 0) config.tfidf_threshold = o.threshold;
  config.seed = o.seed;
  config.max_iterations = o.max_iter;
  config.pca_activation_dim = o.pca_threshold;
  config.pca_components = o.pca_components;
  const fs::path kw_path = o.keywords.empty() ? fs::path(o.vectors).replace_filename("keywords.json") : fs::path(o.keywords);
  auto keywords = keywords_from_json(read_json(kw_path));
  const auto truth_map = truth_by_hash(o.labels);
  std::vector<Label> truth;
  for (const auto& h : v.hashes) {
    const auto it = truth_map.find(h);
    if (it == truth_map.end()) throw Error(ErrorCode::AlignmentError, "no label for contract " + h);
    truth.push_back(it->second);
  }
  save_pipeline_model(fit_pipeline_model(config, v.values, truth, std::move(keywords)), o.out);
}

void cmd_evaluate(const std::string& model_path, const std::string& dataset_path, const std::string& out) {
  const auto model = load_pipeline_model(model_path);
  const auto dataset = load_dataset(dataset_path);
  const auto cm = confusion(predict_dataset(model, dataset), dataset.truth_labels());
  const auto report = metrics(cm);
  write_json(out, report_to_json(model.config.vulnerability, cm, report, config_to_json(model.config)));
  const ReportRow row{model.config.vulnerability, cm, report};
  std::cout << format_report_table(std::span(&row, 1));
}

void cmd_project(const std::string& vectors_path, const std::string& model_path, const std::string& out) {
  const auto model = load_pipeline_model(model_path);
  Matrix X = to_matrix(load_vectors(vectors_path).values);
  if (model.pca) X = pca_transform(*model.pca, X);
  if (X.cols() != model.clusters.centers.cols()) throw Error(ErrorCode::DimError, "vector width does not match the model");
  std::vector<int> assignments;
  for (Eigen::Index r = 0; r < X.rows(); ++r) assignments.push_back(nearest_center(model.clusters.centers, X.row(r).transpose()));
  write_text(out, points_csv(project2d(X, assignments, model.clusters.labels)));
}

struct RunOpts {
  std::string config, kind, vuln, clean, dataset, workdir;
  std::optional<double> fraction;
  std::optional<std::int64_t> seed;
};

PipelineConfig resolve_run_config(const RunOpts& o) {
  auto c = base_config(o.config, o.kind);
  if (!o.vuln.empty()) c.vulnerable_dir = o.vuln;
  if (!o.clean.empty()) c.clean_dir = o.clean;
  if (!o.dataset.empty()) c.dataset = o.dataset;
  if (!o.workdir.empty()) c.workdir = o.workdir;
  if (o.fraction) c.vulnerable_fraction = *o.fraction;
  if (o.seed) c.seed = *o.seed;
  return c;
}

void cmd_run(const RunOpts& o) {
  const auto result = run_pipeline(resolve_run_config(o));
  const auto report = read_json(result.stage_dir / "report.json");
  std::cout << read_text(result.stage_dir / "report.txt");
  std::cout << json{{"stage_dir", result.stage_dir.string()}, {"metrics", report["metrics"]}}.dump() << '\n';
}

void cmd_scan(const RunOpts& o, const std::string& model_path, const std::string& contract) {
  fs::path path = model_path;
  if (path.empty()) path = resolve_run_config(o).stage_dir() / "model.json";
  const auto model = load_pipeline_model(path);
  std::cout << scan_to_json(scan(model, read_text(contract))).dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised smart-contract vulnerability detection"};
  app.require_subcommand(1);
  std::string stage;

  IngestOpts ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Fetch verified sources into a deduplicating store");
  c_ingest->add_option("--chain", ingest.chain, "explorer family, or 'local'")->required();
  c_ingest->add_option("--addresses", ingest.addresses, "file with one address per line");
  c_ingest->add_option("--in", ingest.in, "directory of .sol files (chain local)");
  c_ingest->add_option("--store", ingest.store, "store directory")->capture_default_str();
  c_ingest->add_option("--endpoint", ingest.endpoint, "override the explorer URL");
  c_ingest->add_option("--rate", ingest.rate, "requests per second")->capture_default_str();
  c_ingest->add_option("--jobs", ingest.jobs, "concurrent fetchers")->capture_default_str();
  c_ingest->add_option("--retries", ingest.retries, "retries after a rate-limit reply")->capture_default_str();

  std::string bd_vuln, bd_clean, bd_out;
  double bd_fraction = 0.3;
  auto* c_bd = app.add_subcommand("build-dataset", "Mix vulnerable and clean contracts at a fixed fraction");
  c_bd->add_option("--vuln", bd_vuln)->required();
  c_bd->add_option("--clean", bd_clean)->required();
  c_bd->add_option("--fraction", bd_fraction)->capture_default_str();
  c_bd->add_option("--out", bd_out)->required();

  std::string pp_in, pp_out;
  auto* c_pp = app.add_subcommand("preprocess", "Strip comments and tokenize");
  c_pp->add_option("--in", pp_in, "dataset file, store or .sol directory")->required();
  c_pp->add_option("--out", pp_out, "token directory")->required();

  std::string dt_kind, dt_in, dt_out = "flags.json";
  auto* c_dt = app.add_subcommand("detect", "Run a regex pattern over a corpus");
  c_dt->add_option("--kind", dt_kind)->required();
  c_dt->add_option("--in", dt_in, "token directory or source input")->required();
  c_dt->add_option("--out", dt_out)->capture_default_str();

  std::string te_in, te_out = "model.vec";
  EmbeddingConfig te_cfg;
  auto* c_te = app.add_subcommand("train-embedding", "Train word vectors on a token directory");
  c_te->add_option("--in", te_in)->required();
  c_te->add_option("--dim", te_cfg.vector_size)->capture_default_str();
  c_te->add_option("--seed", te_cfg.seed)->capture_default_str();
  c_te->add_option("--window", te_cfg.window)->capture_default_str();
  c_te->add_option("--epochs", te_cfg.epochs)->capture_default_str();
  c_te->add_option("--sg", te_cfg.sg, "1 skip-gram, 0 CBOW")->capture_default_str();
  c_te->add_option("--min-count", te_cfg.min_count)->capture_default_str();
  c_te->add_option("--negative", te_cfg.negative)->capture_default_str();
  c_te->add_option("--workers", te_cfg.workers)->capture_default_str();
  c_te->add_option("--out", te_out)->capture_default_str();

  std::string vz_in, vz_embedding, vz_out = "vectors.json";
  std::vector<std::string> vz_flags;
  double vz_threshold = 0.7;
  auto* c_vz = app.add_subcommand("vectorize", "Select keywords and build document vectors");
  c_vz->add_option("--in", vz_in)->required();
  c_vz->add_option("--embedding", vz_embedding)->required();
  c_vz->add_option("--flags", vz_flags, "flags.json from detect (repeatable)");
  c_vz->add_option("--threshold", vz_threshold)->capture_default_str();
  c_vz->add_option("--out", vz_out)->capture_default_str();

  ClusterOpts cl;
  auto* c_cl = app.add_subcommand("cluster", "Fit k-means and label clusters");
  c_cl->add_option("--vectors", cl.vectors)->required();
  c_cl->add_option("--labels", cl.labels, "dataset file or token directory with truth labels")->required();
  c_cl->add_option("--keywords", cl.keywords, "defaults to keywords.json beside the vectors");
  c_cl->add_option("--kind", cl.kind)->capture_default_str();
  c_cl->add_option("--k", cl.k, "defaults per kind");
  c_cl->add_option("--seed", cl.seed)->capture_default_str();
  c_cl->add_option("--max-iter", cl.max_iter)->capture_default_str();
  c_cl->add_option("--pca-threshold", cl.pca_threshold)->capture_default_str();
  c_cl->add_option("--pca-components", cl.pca_components)->capture_default_str();
  c_cl->add_option("--threshold", cl.threshold, "recorded in the model config");
  c_cl->add_option("--out", cl.out)->capture_default_str();

  std::string ev_model, ev_dataset, ev_out = "report.json";
  auto* c_ev = app.add_subcommand("evaluate", "Score a model against a labeled dataset");
  c_ev->add_option("--model", ev_model)->required();
  c_ev->add_option("--dataset", ev_dataset)->required();
  c_ev->add_option("--out", ev_out)->capture_default_str();

  std::string pj_vectors, pj_model, pj_out = "points.csv";
  auto* c_pj = app.add_subcommand("project", "Export 2D PCA coordinates for plotting");
  c_pj->add_option("--vectors", pj_vectors)->required();
  c_pj->add_option("--model", pj_model)->required();
  c_pj->add_option("--out", pj_out)->capture_default_str();

  RunOpts run;
  std::string sc_model, sc_contract;
  auto add_run_options = [&](CLI::App* c) {
    c->add_option("--config", run.config, "pipeline config JSON");
    c->add_option("--kind", run.kind);
    c->add_option("--vuln", run.vuln);
    c->add_option("--clean", run.clean);
    c->add_option("--dataset", run.dataset);
    c->add_option("--fraction", run.fraction);
    c->add_option("--workdir", run.workdir);
    c->add_option("--seed", run.seed);
  };
  auto* c_run = app.add_subcommand("run", "Full pipeline for one vulnerability kind");
  add_run_options(c_run);
  auto* c_scan = app.add_subcommand("scan", "Classify one contract with a trained model");
  add_run_options(c_scan);
  c_scan->add_option("--model", sc_model, "defaults to <workdir>/<kind>/model.json");
  c_scan->add_option("contract", sc_contract, "Solidity source file")->required();

  CLI11_PARSE(app, argc, argv);
  stage = app.get_subcommands().front()->get_name();

  try {
    if (*c_ingest) cmd_ingest(ingest);
    else if (*c_bd) cmd_build_dataset(bd_vuln, bd_clean, bd_fraction, bd_out);
    else if (*c_pp) cmd_preprocess(pp_in, pp_out);
    else if (*c_dt) cmd_detect(dt_kind, dt_in, dt_out);
    else if (*c_te) cmd_train_embedding(te_in, te_cfg, te_out);
    else if (*c_vz) cmd_vectorize(vz_in, vz_embedding, vz_flags, vz_threshold, vz_out);
    else if (*c_cl) cmd_cluster(cl);
    else if (*c_ev) cmd_evaluate(ev_model, ev_dataset, ev_out);
    else if (*c_pj) cmd_project(pj_vectors, pj_model, pj_out);
    else if (*c_run) cmd_run(run);
    else if (*c_scan) cmd_scan(run, sc_model, sc_contract);
  } catch (const Error& e) {
    fail(e.stage().empty() ? stage : e.stage(), e.code(), e.what());
  } catch (const json::exception& e) {
    fail(stage, ErrorCode::FormatError, e.what());
  } catch (const fs::filesystem_error& e) {
    fail(stage, ErrorCode::PathError, e.what());
  } catch (const std::exception& e) {
    fail(stage, ErrorCode::InvalidInput, e.what());
  }
  return 0;
}
