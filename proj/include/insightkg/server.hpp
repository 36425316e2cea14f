#pragma once

// Read-only HTTP API over an immutable pipeline snapshot.
//
//   GET /kg/{inheritance|relevance}?N=&M=&T=   knowledge graph JSON
//   GET /paper/{id}                            title, keywords, insight texts, cited_by_count
//   GET /matrix/row/{id}                       valid outgoing chain scores
//   GET /meta                                  hashes and counts
//
// A /kg request whose N/M/T differ from the snapshot's rebuilds the forest
// and graph into request-local state; ingestion and classification never
// rerun per request.

#include <atomic>
#include <charconv>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "insightkg/pipeline.hpp"

namespace ikg::service {

namespace fs = std::filesystem;

struct Snapshot {
  corpus::TopicSubset subset;
  std::vector<insight::InsightBundle> bundles;
  std::optional<relevance::RelevanceMatrix> matrix;
  text::DocumentFrequency df;
  std::map<tree::ForestKind, tree::TreeParams> params;
  std::map<tree::ForestKind, std::string> kg_json;
  pipeline::TreeOptions tree_options;
  kg::KgOptions kg_options;
  std::map<CorpusId, std::size_t> cited_by;
  std::string config_hash;
  std::string snapshot_hash;
};

inline std::shared_ptr<const Snapshot> load_snapshot(const fs::path& out_dir) {
  return pipeline::run_stage(pipeline::Stage::serve, [&] {
    auto s = std::make_shared<Snapshot>();
    s->subset = pipeline::load_subset(out_dir);
    s->bundles = pipeline::load_bundles(out_dir);
    s->df = pipeline::document_frequency(s->subset);
    std::uint64_t h = text::fnv1a(pipeline::read_file(out_dir / "subset.jsonl"));
    h = text::fnv1a(pipeline::read_file(out_dir / "bundles.jsonl"), h);
    if (fs::exists(out_dir / "matrix.json")) {
      const auto raw = pipeline::read_file(out_dir / "matrix.json");
      h = text::fnv1a(raw, h);
      s->matrix = relevance::matrix_from_json(nlohmann::json::parse(raw));
    }
    for (auto kind : {tree::ForestKind::inheritance, tree::ForestKind::relevance}) {
      s->params[kind] = tree::TreeParams{};
      const auto fp = pipeline::forest_path(out_dir, kind);
      if (fs::exists(fp)) s->params[kind] = tree::forest_from_json(pipeline::read_json(fp)).params;
      const auto kp = pipeline::kg_path(out_dir, kind);
      if (fs::exists(kp)) {
        s->kg_json[kind] = pipeline::read_file(kp);
        h = text::fnv1a(s->kg_json[kind], h);
      }
    }
    if (fs::exists(out_dir / "manifest.json")) {
      const auto m = pipeline::read_json(out_dir / "manifest.json");
      s->config_hash = m.value("config_hash", std::string());
      if (m.contains("options")) {
        const auto& o = m.at("options");
        s->kg_options.keywords = o.value("keywords", s->kg_options.keywords);
        s->kg_options.vocabulary = o.value("vocabulary", s->kg_options.vocabulary);
        if (o.value("expansion", std::string("bfs")) == "dfs") s->tree_options.order = tree::ExpansionOrder::dfs;
        s->tree_options.root_average = relevance::parse_chain_average(o.value("root_average", std::string("outgoing")));
      }
    }
    for (const auto& p : s->subset.papers) s->cited_by[p.corpus_id] = 0;
    for (const auto& e : s->subset.citation_edges) ++s->cited_by[e.cited];
    s->snapshot_hash = text::hex64(h);
    return std::shared_ptr<const Snapshot>(std::move(s));
  });
}

// Holds the current snapshot; a rebuild swaps it in one step while
// in-flight requests keep the one they started with.
class KgStore {
 public:
  explicit KgStore(std::shared_ptr<const Snapshot> s) : snapshot_(std::move(s)) {}

  std::shared_ptr<const Snapshot> get() const {
    std::lock_guard lock(mutex_);
    return snapshot_;
  }

  void replace(std::shared_ptr<const Snapshot> s) {
    std::lock_guard lock(mutex_);
    snapshot_ = std::move(s);
  }

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
};

struct Response {
  int status = 200;
  std::string body;
};

using Query = std::multimap<std::string, std::string>;

namespace detail {

inline Response json_response(int status, const nlohmann::json& j) { return Response{status, j.dump() + "\n"}; }

inline Response error_response(int status, const std::string& message, const std::string& field = {}) {
  nlohmann::json j = {{"error", message}};
  if (!field.empty()) j["field"] = field;
  return json_response(status, j);
}

inline std::optional<long long> parse_integer(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

struct BadField {
  std::string field;
  std::string message;
};

}  // namespace detail

inline std::string build_kg_json(const Snapshot& s, tree::ForestKind kind, const tree::TreeParams& params) {
  auto cached = s.kg_json.find(kind);
  if (cached != s.kg_json.end() && s.params.at(kind) == params) return cached->second;
  if (kind == tree::ForestKind::relevance && !s.matrix)
    fail(ErrorCode::empty_matrix, "no relevance matrix in this snapshot");
  const relevance::RelevanceMatrix empty;
  const auto built = pipeline::build_forest(kind, s.subset, s.matrix ? *s.matrix : empty, params, s.tree_options);
  return kg::export_kg(kg::assemble_kg(built.forest, s.subset, s.bundles, s.df, s.kg_options));
}

class Api {
 public:
  explicit Api(const KgStore& store) : store_(store) {}

  Response handle(const std::string& path, const Query& query = {}) const {
    const auto snapshot = store_.get();
    try {
      if (path == "/meta") return meta(*snapshot);
      if (path.rfind("/kg/", 0) == 0) return knowledge_graph(*snapshot, path.substr(4), query);
      if (path.rfind("/paper/", 0) == 0) return paper(*snapshot, path.substr(7));
      if (path.rfind("/matrix/row/", 0) == 0) return matrix_row(*snapshot, path.substr(12));
      return detail::error_response(404, "no route for " + path);
    } catch (const detail::BadField& b) {
      return detail::error_response(400, b.message, b.field);
    } catch (const Error& e) {
      return detail::error_response(500, std::string(to_string(e.code())) + ": " + e.what());
    }
  }

 private:
  static CorpusId path_id(const std::string& raw) {
    const auto v = detail::parse_integer(raw);
    if (!v) throw detail::BadField{"id", "paper id must be an integer"};
    return *v;
  }

  static Response knowledge_graph(const Snapshot& s, const std::string& kind_name, const Query& q) {
    tree::ForestKind kind;
    if (kind_name == "inheritance") kind = tree::ForestKind::inheritance;
    else if (kind_name == "relevance") kind = tree::ForestKind::relevance;
    else return detail::error_response(404, "unknown graph kind '" + kind_name + "'");

    tree::TreeParams params = s.params.at(kind);
    auto read = [&](const char* field, std::size_t& target) {
      auto it = q.find(field);
      if (it == q.end()) return;
      const auto v = detail::parse_integer(it->second);
      if (!v) throw detail::BadField{field, std::string(field) + " must be an integer"};
      if (*v < 1) throw detail::BadField{field, std::string(field) + " must be >= 1"};
      if (*v > 1000000) throw detail::BadField{field, std::string(field) + " is too large"};
      target = static_cast<std::size_t>(*v);
    };
    read("N", params.N);
    read("M", params.M);
    read("T", params.T);
    return Response{200, build_kg_json(s, kind, params)};
  }

  static Response paper(const Snapshot& s, const std::string& raw_id) {
    const auto id = path_id(raw_id);
    const auto* p = s.subset.find(id);
    if (!p) return detail::error_response(404, "unknown paper " + raw_id);
    std::string resolved, finding;
    for (const auto& b : s.bundles)
      if (b.paper_id == id) resolved = b.resolved_text, finding = b.finding_text;
    return detail::json_response(200, {{"id", id},
                                       {"title", p->title},
                                       {"keywords", kg::extract_keywords(*p, s.df, s.kg_options.keywords)},
                                       {"resolved_text", resolved},
                                       {"finding_text", finding},
                                       {"cited_by_count", s.cited_by.at(id)}});
  }

  static Response matrix_row(const Snapshot& s, const std::string& raw_id) {
    const auto id = path_id(raw_id);
    if (!s.matrix) return detail::error_response(404, "no relevance matrix in this snapshot");
    const auto i = s.matrix->index_of(id);
    if (!i) return detail::error_response(404, "unknown paper " + raw_id);
    std::vector<tree::Candidate> row;
    for (std::size_t j = 0; j < s.matrix->size(); ++j)
      if (s.matrix->valid(*i, j)) row.push_back(tree::Candidate{s.matrix->id(j), s.matrix->score(*i, j)});
    std::sort(row.begin(), row.end(), tree::detail::ranks_before);
    nlohmann::json chains = nlohmann::json::array();
    for (const auto& c : row) chains.push_back({{"to", c.id}, {"score", c.score}});
    return detail::json_response(200, {{"paper_id", id}, {"chains", chains}});
  }

  static Response meta(const Snapshot& s) {
    std::size_t flagged = 0;
    for (const auto& b : s.bundles) flagged += b.flagged() ? 1 : 0;
    const std::size_t valid =
        s.matrix ? s.matrix->size() * s.matrix->size() - s.matrix->masked_count() : 0;
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [kind, p] : s.params) params[std::string(tree::to_string(kind))] = tree::to_json(p);
    return detail::json_response(200, {{"config_hash", s.config_hash},
                                       {"snapshot_hash", s.snapshot_hash},
                                       {"topic", s.subset.topic_keyword},
                                       {"params", params},
                                       {"counts",
                                        {{"papers", s.subset.papers.size()},
                                         {"citation_edges", s.subset.citation_edges.size()},
                                         {"bundles", s.bundles.size()},
                                         {"flagged_bundles", flagged},
                                         {"valid_chains", valid}}}});
  }

  const KgStore& store_;
};

// Binds `addr` ("host:port"); port 0 picks a free port.
class HttpServer {
 public:
  explicit HttpServer(const KgStore& store) : api_(store) {
    server_.Get(".*", [this](const httplib::Request& req, httplib::Response& res) {
      Query q(req.params.begin(), req.params.end());
      const auto r = api_.handle(req.path, q);
      res.status = r.status;
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_content(r.body, "application/json; charset=utf-8");
    });
  }

  int bind(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos) fail(ErrorCode::config_error, "bind address must be host:port");
    const auto host = addr.substr(0, colon);
    const auto port = detail::parse_integer(addr.substr(colon + 1));
    if (!port || *port < 0 || *port > 65535) fail(ErrorCode::config_error, "invalid port in '" + addr + "'");
    int bound = *port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, static_cast<int>(*port)) ? static_cast<int>(*port) : -1);
    if (bound < 0) fail(ErrorCode::io_error, "cannot bind " + addr);
    return bound;
  }

  // Blocks until stop().
  void listen() { server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }

 private:
  Api api_;
  httplib::Server server_;
};

}  // namespace ikg::service
