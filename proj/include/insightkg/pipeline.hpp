#pragma once

// Stage orchestration. Every stage reads its inputs from and writes its
// outputs to one output directory, so stages can be rerun in isolation:
//
//   ingest   -> subset.jsonl, edges.csv, ingest.json
//   segment  -> sentences.jsonl
//   train    -> embedding.json, model.json, eval.json
//   classify -> bundles.jsonl
//   relate   -> matrix.json
//   trees    -> forest_<kind>.json, trace_<kind>.jsonl
//   export   -> kg_<kind>.json
//
// Files are written to "<name>.partial" and renamed on success, so a failed
// stage leaves its partial output behind under that marker.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "insightkg/classifier.hpp"
#include "insightkg/corpus.hpp"
#include "insightkg/embedding.hpp"
#include "insightkg/error.hpp"
#include "insightkg/insight.hpp"
#include "insightkg/kg.hpp"
#include "insightkg/labels.hpp"
#include "insightkg/relevance.hpp"
#include "insightkg/remote_embedding.hpp"
#include "insightkg/segmenter.hpp"
#include "insightkg/trees.hpp"

namespace ikg::pipeline {

namespace fs = std::filesystem;

enum class Stage { config, ingest, segment, train, classify, relate, trees, export_kg, serve };

constexpr std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::config: return "config";
    case Stage::ingest: return "ingest";
    case Stage::segment: return "segment";
    case Stage::train: return "train";
    case Stage::classify: return "classify";
    case Stage::relate: return "relate";
    case Stage::trees: return "trees";
    case Stage::export_kg: return "export";
    case Stage::serve: return "serve";
  }
  return "?";
}

// Process exit code for a failure in `s`; 0 is reserved for success.
constexpr int exit_code(Stage s) { return 2 + static_cast<int>(s); }

class StageError : public Error {
 public:
  StageError(Stage stage, ErrorCode code, const std::string& what)
      : Error(code, what), stage_(stage) {}
  Stage stage() const noexcept { return stage_; }

 private:
  Stage stage_;
};

template <class Fn>
auto run_stage(Stage stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.code(), e.what());
  } catch (const nlohmann::json::exception& e) {
    throw StageError(stage, ErrorCode::input_error, e.what());
  } catch (const fs::filesystem_error& e) {
    throw StageError(stage, ErrorCode::io_error, e.what());
  }
}

// --- file helpers --------------------------------------------------------

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open " + p.string());
  return in;
}

inline void write_atomically(const fs::path& p, const std::function<void(std::ostream&)>& body) {
  const fs::path partial = p.string() + ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io_error, "cannot write " + partial.string());
    body(out);
    out.flush();
    if (!out) fail(ErrorCode::io_error, "write failed for " + partial.string());
  }
  fs::rename(partial, p);
}

inline void write_text(const fs::path& p, const std::string& text) {
  write_atomically(p, [&](std::ostream& out) { out << text; });
}

inline nlohmann::json read_json(const fs::path& p) {
  auto j = nlohmann::json::parse(read_file(p), nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::input_error, "malformed JSON in " + p.string());
  return j;
}

// --- stage inputs shared across stages -----------------------------------

inline corpus::TopicSubset load_subset(const fs::path& out_dir) {
  const auto summary = read_json(out_dir / "ingest.json");
  auto in = open_input(out_dir / "subset.jsonl");
  auto subset = corpus::read_subset(in, summary.at("topic").get<std::string>());
  subset.scanned_documents = summary.value("scanned_documents", subset.scanned_documents);
  subset.malformed_documents = summary.value("malformed_documents", std::size_t{0});
  subset.duplicate_documents = summary.value("duplicate_documents", std::size_t{0});
  return subset;
}

inline text::DocumentFrequency document_frequency(const corpus::TopicSubset& subset) {
  text::DocumentFrequency df;
  for (const auto& p : subset.papers) df.add(corpus::profile_text(p));
  return df;
}

inline embed::ProviderConfig load_provider_config(const fs::path& out_dir) {
  const auto p = out_dir / "embedding.json";
  if (!fs::exists(p)) return embed::ProviderConfig{};
  return embed::provider_config_from_json(read_json(p));
}

inline std::unique_ptr<embed::Provider> stage_provider(const fs::path& out_dir, const corpus::TopicSubset& subset) {
  return embed::make_provider(load_provider_config(out_dir), document_frequency(subset));
}

inline std::vector<insight::InsightBundle> load_bundles(const fs::path& out_dir) {
  auto in = open_input(out_dir / "bundles.jsonl");
  return insight::read_bundles(in);
}

inline fs::path forest_path(const fs::path& out_dir, tree::ForestKind k) {
  return out_dir / ("forest_" + std::string(tree::to_string(k)) + ".json");
}
inline fs::path trace_path(const fs::path& out_dir, tree::ForestKind k) {
  return out_dir / ("trace_" + std::string(tree::to_string(k)) + ".jsonl");
}
inline fs::path kg_path(const fs::path& out_dir, tree::ForestKind k) {
  return out_dir / ("kg_" + std::string(tree::to_string(k)) + ".json");
}

// --- stages --------------------------------------------------------------

inline corpus::TopicSubset ingest(const fs::path& corpus_path, const std::string& topic, const fs::path& out_dir) {
  return run_stage(Stage::ingest, [&] {
    auto in = open_input(corpus_path);
    auto subset = corpus::filter_by_topic(in, topic);
    fs::create_directories(out_dir);
    write_atomically(out_dir / "subset.jsonl", [&](std::ostream& o) { corpus::write_subset(subset, o); });
    write_atomically(out_dir / "edges.csv", [&](std::ostream& o) { corpus::write_edges(subset, o); });
    const nlohmann::json summary = {{"topic", subset.topic_keyword},
                                    {"scanned_documents", subset.scanned_documents},
                                    {"malformed_documents", subset.malformed_documents},
                                    {"duplicate_documents", subset.duplicate_documents},
                                    {"papers", subset.papers.size()},
                                    {"citation_edges", subset.citation_edges.size()},
                                    {"dropped_citations", subset.dropped_citation_count}};
    write_text(out_dir / "ingest.json", summary.dump(2) + "\n");
    return subset;
  });
}

struct SegmentOptions {
  fs::path overrides;      // optional JSON Lines override file
  fs::path abbreviations;  // optional abbreviation list
};

inline std::vector<insight::SegmentedPaper> segment_stage(const fs::path& out_dir, const SegmentOptions& opt = {}) {
  return run_stage(Stage::segment, [&] {
    const auto subset = load_subset(out_dir);
    segment::Segmenter segmenter;
    if (!opt.abbreviations.empty()) {
      auto in = open_input(opt.abbreviations);
      segmenter = segment::Segmenter(segment::read_abbreviations(in));
    }
    segment::OverrideTable overrides;
    if (!opt.overrides.empty()) {
      auto in = open_input(opt.overrides);
      overrides = segment::read_overrides(in);
    }
    std::vector<insight::SegmentedPaper> papers;
    for (const auto& p : subset.papers) {
      auto it = overrides.find(p.corpus_id);
      papers.push_back(insight::SegmentedPaper{
          p.corpus_id, segmenter.segment(p.insight_text, p.corpus_id, it == overrides.end() ? nullptr : &it->second)});
    }
    write_atomically(out_dir / "sentences.jsonl", [&](std::ostream& o) { insight::write_sentences(papers, o); });
    return papers;
  });
}

inline std::vector<insight::SegmentedPaper> load_sentences(const fs::path& out_dir) {
  auto in = open_input(out_dir / "sentences.jsonl");
  return insight::read_sentences(in);
}

struct TrainResult {
  classify::SvmModel model;
  std::optional<classify::EvalReport> report;
};

inline TrainResult train_stage(const fs::path& out_dir, const fs::path& labels_path,
                               const embed::ProviderConfig& provider_cfg, const classify::GridSpec& grid) {
  return run_stage(Stage::train, [&] {
    const auto subset = load_subset(out_dir);
    provider_cfg.validate();
    write_text(out_dir / "embedding.json", embed::to_json(provider_cfg).dump(2) + "\n");
    const auto provider = embed::make_provider(provider_cfg, document_frequency(subset));

    auto in = open_input(labels_path);
    const auto labeled = read_label_file(in);
    std::vector<std::string> train_text, test_text;
    classify::TrainingData data;
    data.provider_tag = provider->tag();
    std::vector<Label> test_labels;
    for (const auto& s : labeled) {
      if (s.split == Split::train) {
        train_text.push_back(s.text);
        data.y.push_back(s.label);
      } else {
        test_text.push_back(s.text);
        test_labels.push_back(s.label);
      }
    }
    for (auto& v : provider->embed_batch(train_text)) data.x.push_back(std::move(v.values));

    TrainResult result{classify::train(data, grid), std::nullopt};
    write_text(out_dir / "model.json", classify::to_json(result.model).dump() + "\n");
    if (!test_text.empty()) {
      result.report = classify::evaluate(result.model, provider->embed_batch(test_text), test_labels);
      write_text(out_dir / "eval.json", classify::to_json(*result.report).dump(2) + "\n");
    }
    return result;
  });
}

inline classify::SvmModel load_model(const fs::path& p) { return classify::model_from_json(read_json(p)); }

inline std::vector<insight::InsightBundle> classify_stage(const fs::path& out_dir, const fs::path& model_path = {}) {
  return run_stage(Stage::classify, [&] {
    const auto subset = load_subset(out_dir);
    const auto model = load_model(model_path.empty() ? out_dir / "model.json" : model_path);
    const auto provider = stage_provider(out_dir, subset);
    const auto papers = load_sentences(out_dir);
    auto bundles = insight::extract_insight_bundles(papers, model, *provider);
    write_atomically(out_dir / "bundles.jsonl", [&](std::ostream& o) { insight::write_bundles(bundles, o); });
    return bundles;
  });
}

inline relevance::RelevanceMatrix relate_stage(const fs::path& out_dir) {
  return run_stage(Stage::relate, [&] {
    const auto subset = load_subset(out_dir);
    const auto provider = stage_provider(out_dir, subset);
    auto matrix = relevance::build_relevance_matrix(load_bundles(out_dir), *provider);
    write_text(out_dir / "matrix.json", relevance::to_json(matrix).dump() + "\n");
    return matrix;
  });
}

inline relevance::RelevanceMatrix load_matrix(const fs::path& out_dir) {
  return relevance::matrix_from_json(read_json(out_dir / "matrix.json"));
}

struct TreeOptions {
  tree::ExpansionOrder order = tree::ExpansionOrder::bfs;
  relevance::ChainAverage root_average = relevance::ChainAverage::outgoing;
};

inline tree::ForestBuild build_forest(tree::ForestKind kind, const corpus::TopicSubset& subset,
                                      const relevance::RelevanceMatrix& matrix, const tree::TreeParams& params,
                                      const TreeOptions& opt) {
  if (kind == tree::ForestKind::inheritance)
    return tree::build_inheritance_forest(tree::CitationGraph::from_subset(subset), params,
                                          tree::InheritanceOptions{opt.order, std::nullopt});
  return tree::build_relevance_forest(matrix, params, tree::RelevanceOptions{opt.order, opt.root_average});
}

inline tree::ForestBuild trees_stage(const fs::path& out_dir, tree::ForestKind kind, const tree::TreeParams& params,
                                     const TreeOptions& opt = {}) {
  return run_stage(Stage::trees, [&] {
    params.validate();
    const auto subset = load_subset(out_dir);
    const auto matrix = kind == tree::ForestKind::relevance ? load_matrix(out_dir) : relevance::RelevanceMatrix{};
    auto built = build_forest(kind, subset, matrix, params, opt);
    write_text(forest_path(out_dir, kind), tree::to_json(built.forest).dump(2) + "\n");
    write_atomically(trace_path(out_dir, kind), [&](std::ostream& o) { tree::write_trace(built.trace, o); });
    return built;
  });
}

inline std::string export_stage(const fs::path& out_dir, tree::ForestKind kind, const kg::KgOptions& opt = {}) {
  return run_stage(Stage::export_kg, [&] {
    const auto subset = load_subset(out_dir);
    const auto forest = tree::forest_from_json(read_json(forest_path(out_dir, kind)));
    const auto graph = kg::assemble_kg(forest, subset, load_bundles(out_dir), document_frequency(subset), opt);
    auto text = kg::export_kg(graph);
    write_text(kg_path(out_dir, kind), text);
    return text;
  });
}

// --- end-to-end ----------------------------------------------------------

struct PipelineConfig {
  fs::path corpus;
  std::string topic;
  fs::path labels;  // required unless `model` is set
  fs::path model;   // frozen model; skips training
  SegmentOptions segmentation;
  embed::ProviderConfig embedding;
  classify::GridSpec grid;
  tree::TreeParams inheritance_params;
  tree::TreeParams relevance_params;
  TreeOptions tree_options;
  kg::KgOptions kg_options;
  fs::path out_dir;
  std::string bind_address = "127.0.0.1:8080";
  nlohmann::json source;  // the parsed config document

  std::string hash() const { return text::hex64(text::fnv1a(source.dump())); }
};

namespace detail {

inline tree::TreeParams params_from_json(const nlohmann::json& j, const char* name) {
  tree::TreeParams p;
  if (!j.contains(name)) return p;
  const auto& t = j.at(name);
  auto read = [&](const char* key, std::size_t fallback) -> std::size_t {
    if (!t.contains(key)) return fallback;
    const auto v = t.at(key).get<long long>();
    if (v < 1) fail(ErrorCode::config_error, std::string(name) + "." + key + " must be >= 1");
    return static_cast<std::size_t>(v);
  };
  p.N = read("N", p.N);
  p.M = read("M", p.M);
  p.T = read("T", p.T);
  return p;
}

}  // namespace detail

// Relative paths resolve against the config file's directory.
inline PipelineConfig load_config(const fs::path& config_path) {
  return run_stage(Stage::config, [&]() -> PipelineConfig {
    if (!fs::exists(config_path)) fail(ErrorCode::config_error, "config file " + config_path.string() + " not found");
    auto j = nlohmann::json::parse(read_file(config_path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(ErrorCode::config_error, "config is not a JSON object");
    const auto base = config_path.parent_path();
    auto path = [&](const char* key) -> fs::path {
      if (!j.contains(key) || j.at(key).get<std::string>().empty()) return {};
      fs::path p = j.at(key).get<std::string>();
      return p.is_relative() ? base / p : p;
    };
    try {
      PipelineConfig c;
      c.source = j;
      c.corpus = path("corpus");
      c.topic = j.value("topic", std::string());
      c.labels = path("labels");
      c.model = path("model");
      c.segmentation.overrides = path("segment_overrides");
      c.segmentation.abbreviations = path("abbreviations");
      c.out_dir = path("out");
      c.bind_address = j.value("bind", c.bind_address);
      if (j.contains("embedding")) c.embedding = embed::provider_config_from_json(j.at("embedding"));
      if (j.contains("classifier")) {
        const auto& g = j.at("classifier");
        c.grid.C = g.value("C", c.grid.C);
        c.grid.gamma = g.value("gamma", c.grid.gamma);
        c.grid.folds = g.value("folds", c.grid.folds);
        c.grid.smo.tolerance = g.value("tolerance", c.grid.smo.tolerance);
        c.grid.smo.max_iterations = g.value("max_iterations", c.grid.smo.max_iterations);
        if (g.contains("kernels")) {
          c.grid.kernels.clear();
          for (const auto& k : g.at("kernels")) c.grid.kernels.push_back(classify::parse_kernel(k.get<std::string>()));
        }
      }
      c.inheritance_params = detail::params_from_json(j, "inheritance");
      c.relevance_params = detail::params_from_json(j, "relevance");
      if (j.contains("expansion")) {
        const auto e = j.at("expansion").get<std::string>();
        if (e == "bfs") c.tree_options.order = tree::ExpansionOrder::bfs;
        else if (e == "dfs") c.tree_options.order = tree::ExpansionOrder::dfs;
        else fail(ErrorCode::config_error, "expansion must be bfs or dfs");
      }
      if (j.contains("root_average"))
        c.tree_options.root_average = relevance::parse_chain_average(j.at("root_average").get<std::string>());
      c.kg_options.keywords = j.value("keywords", c.kg_options.keywords);
      c.kg_options.vocabulary = j.value("vocabulary", c.kg_options.vocabulary);

      if (c.corpus.empty() || !fs::exists(c.corpus))
        fail(ErrorCode::config_error, "corpus path '" + c.corpus.string() + "' does not exist");
      if (text::trim(c.topic).empty()) fail(ErrorCode::config_error, "topic keyword is required");
      if (c.out_dir.empty()) fail(ErrorCode::config_error, "out directory is required");
      if (c.model.empty() && (c.labels.empty() || !fs::exists(c.labels)))
        fail(ErrorCode::config_error, "labels file is required when no frozen model is given");
      if (!c.model.empty() && !fs::exists(c.model))
        fail(ErrorCode::config_error, "model file '" + c.model.string() + "' does not exist");
      for (const auto* p : {&c.segmentation.overrides, &c.segmentation.abbreviations})
        if (!p->empty() && !fs::exists(*p)) fail(ErrorCode::config_error, "file '" + p->string() + "' does not exist");
      return c;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::config_error, std::string("config: ") + e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::invalid_argument) fail(ErrorCode::config_error, e.what());
      throw;
    }
  });
}

// ingest -> segment -> train (or frozen model) -> classify -> relate ->
// both forests -> both knowledge graphs.
inline void run_all(const PipelineConfig& cfg) {
  const auto& out = cfg.out_dir;
  ingest(cfg.corpus, cfg.topic, out);
  segment_stage(out, cfg.segmentation);
  if (cfg.model.empty()) {
    train_stage(out, cfg.labels, cfg.embedding, cfg.grid);
  } else {
    run_stage(Stage::train, [&] {
      write_text(out / "embedding.json", embed::to_json(cfg.embedding).dump(2) + "\n");
      write_text(out / "model.json", read_file(cfg.model));
      return 0;
    });
  }
  classify_stage(out);
  relate_stage(out);
  for (auto kind : {tree::ForestKind::inheritance, tree::ForestKind::relevance}) {
    trees_stage(out, kind, kind == tree::ForestKind::inheritance ? cfg.inheritance_params : cfg.relevance_params,
                cfg.tree_options);
    export_stage(out, kind, cfg.kg_options);
  }
  const nlohmann::json manifest = {{"config_hash", cfg.hash()}, {"topic", cfg.topic}, {"options", {
      {"keywords", cfg.kg_options.keywords}, {"vocabulary", cfg.kg_options.vocabulary},
      {"expansion", cfg.tree_options.order == tree::ExpansionOrder::bfs ? "bfs" : "dfs"},
      {"root_average", cfg.tree_options.root_average == relevance::ChainAverage::outgoing ? "outgoing"
                       : cfg.tree_options.root_average == relevance::ChainAverage::incoming ? "incoming" : "both"}}}};
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace ikg::pipeline
