// insightkg: command-line driver for the knowledge-graph pipeline.

#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "insightkg/pipeline.hpp"
#include "insightkg/server.hpp"

namespace {

using namespace ikg;
namespace fs = std::filesystem;

struct ProviderFlags {
  std::string kind = "local";
  std::size_t dim = 1024;
  std::uint64_t seed = 0;
  std::string endpoint;
  int timeout_ms = 30000;

  embed::ProviderConfig config() const {
    nlohmann::json j = {{"kind", kind}, {"dim", dim}, {"seed", seed}, {"endpoint", endpoint}, {"timeout_ms", timeout_ms}};
    return embed::provider_config_from_json(j);
  }
};

service::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int serve(const fs::path& out_dir, const std::string& addr) {
  service::KgStore store(service::load_snapshot(out_dir));
  service::HttpServer server(store);
  const int port = pipeline::run_stage(pipeline::Stage::serve, [&] { return server.bind(addr); });
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "serving " << out_dir.string() << " on port " << port << std::endl;
  server.listen();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical knowledge graphs of research insight from a paper corpus"};
  app.require_subcommand(1);

  fs::path out_dir;
  auto add_out = [&](CLI::App* cmd) { cmd->add_option("--out", out_dir, "Output directory")->required(); };

  // ingest
  fs::path corpus_path;
  std::string topic;
  auto* ingest = app.add_subcommand("ingest", "Filter a topic subset and build its citation graph");
  ingest->add_option("--corpus", corpus_path, "JSON Lines corpus")->required()->check(CLI::ExistingFile);
  ingest->add_option("--topic", topic, "Topic keyword (case-insensitive)")->required();
  add_out(ingest);

  // segment
  pipeline::SegmentOptions seg_opt;
  auto* segment = app.add_subcommand("segment", "Split insight text into sentences");
  segment->add_option("--overrides", seg_opt.overrides, "JSON Lines split/join overrides")->check(CLI::ExistingFile);
  segment->add_option("--abbreviations", seg_opt.abbreviations, "Protected abbreviation list")->check(CLI::ExistingFile);
  add_out(segment);

  // train
  fs::path labels_path;
  classify::GridSpec grid;
  std::vector<std::string> kernels = {"rbf"};
  ProviderFlags provider;
  auto* train = app.add_subcommand("train", "Grid-search and fit the stance classifier");
  train->add_option("--labels", labels_path, "JSON Lines label file")->required()->check(CLI::ExistingFile);
  train->add_option("--kernel", kernels, "Kernels to search (rbf, linear)")->delimiter(',');
  train->add_option("--C", grid.C, "Penalty values")->delimiter(',');
  train->add_option("--gamma", grid.gamma, "RBF gamma values")->delimiter(',');
  train->add_option("--folds", grid.folds, "Cross-validation folds");
  train->add_option("--tolerance", grid.smo.tolerance, "SMO KKT tolerance");
  train->add_option("--provider", provider.kind, "Embedding provider (local, remote)");
  train->add_option("--dim", provider.dim, "Embedding dimension");
  train->add_option("--seed", provider.seed, "Feature hashing seed");
  train->add_option("--endpoint", provider.endpoint, "Remote embedding endpoint");
  train->add_option("--timeout-ms", provider.timeout_ms, "Remote embedding timeout");
  add_out(train);

  // classify
  fs::path model_path;
  auto* classify_cmd = app.add_subcommand("classify", "Label sentences and build per-paper insight bundles");
  classify_cmd->add_option("--model", model_path, "Model file (default: <out>/model.json)")->check(CLI::ExistingFile);
  add_out(classify_cmd);

  // relate
  auto* relate = app.add_subcommand("relate", "Build the Finding -> Resolved relevance matrix");
  add_out(relate);

  // trees
  std::string kind_name;
  tree::TreeParams params;
  std::string order = "bfs", root_average = "outgoing";
  auto* trees = app.add_subcommand("trees", "Build an inheritance or relevance forest");
  trees->add_option("--kind", kind_name, "inheritance or relevance")->required()->check(CLI::IsMember({"inheritance", "relevance"}));
  trees->add_option("--N", params.N, "Maximum number of roots")->check(CLI::PositiveNumber);
  trees->add_option("--M", params.M, "Maximum leaves per node")->check(CLI::PositiveNumber);
  trees->add_option("--T", params.T, "Maximum depth")->check(CLI::PositiveNumber);
  trees->add_option("--order", order, "Expansion order")->check(CLI::IsMember({"bfs", "dfs"}));
  trees->add_option("--root-average", root_average, "Root ranking average")
      ->check(CLI::IsMember({"outgoing", "incoming", "both"}));
  add_out(trees);

  // export
  kg::KgOptions kg_opt;
  auto* export_cmd = app.add_subcommand("export", "Assemble and write the knowledge graph JSON");
  export_cmd->add_option("--kind", kind_name, "inheritance or relevance")->required()->check(CLI::IsMember({"inheritance", "relevance"}));
  export_cmd->add_option("--keywords", kg_opt.keywords, "Keywords per node");
  export_cmd->add_option("--vocabulary", kg_opt.vocabulary, "Co-occurring terms per edge");
  add_out(export_cmd);

  // serve
  std::string addr = "127.0.0.1:8080";
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API over a finished output directory");
  serve_cmd->add_option("--addr", addr, "host:port to bind");
  add_out(serve_cmd);

  // run-all
  fs::path config_path;
  bool then_serve = false;
  auto* run_all = app.add_subcommand("run-all", "Run every stage from a config file");
  run_all->add_option("--config", config_path, "JSON pipeline config")->required();
  run_all->add_flag("--serve", then_serve, "Serve the result when done");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const auto subset = pipeline::ingest(corpus_path, topic, out_dir);
      std::cout << "papers " << subset.papers.size() << ", edges " << subset.citation_edges.size() << ", dropped "
                << subset.dropped_citation_count << ", malformed " << subset.malformed_documents << "\n";
    } else if (*segment) {
      const auto papers = pipeline::segment_stage(out_dir, seg_opt);
      std::size_t n = 0;
      for (const auto& p : papers) n += p.sentences.size();
      std::cout << "sentences " << n << " in " << papers.size() << " papers\n";
    } else if (*train) {
      grid.kernels.clear();
      for (const auto& k : kernels) grid.kernels.push_back(classify::parse_kernel(k));
      const auto cfg = pipeline::run_stage(pipeline::Stage::train, [&] { return provider.config(); });
      const auto result = pipeline::train_stage(out_dir, labels_path, cfg, grid);
      std::cout << "kernel " << svm::to_string(result.model.kernel.kind) << ", C " << result.model.C << ", gamma "
                << result.model.kernel.gamma << "\n";
      if (result.report) std::cout << classify::format_report(*result.report);
      for (const auto& w : result.model.warnings) std::cerr << "warning: " << w << "\n";
    } else if (*classify_cmd) {
      const auto bundles = pipeline::classify_stage(out_dir, model_path);
      std::size_t flagged = 0;
      for (const auto& b : bundles) flagged += b.flagged();
      std::cout << "bundles " << bundles.size() << ", without insight sentences " << flagged << "\n";
    } else if (*relate) {
      const auto m = pipeline::relate_stage(out_dir);
      std::cout << "papers " << m.size() << ", masked entries " << m.masked_count() << "\n";
    } else if (*trees) {
      pipeline::TreeOptions opt;
      opt.order = order == "dfs" ? tree::ExpansionOrder::dfs : tree::ExpansionOrder::bfs;
      opt.root_average = relevance::parse_chain_average(root_average);
      const auto built = pipeline::trees_stage(out_dir, tree::parse_kind(kind_name), params, opt);
      std::cout << "trees " << built.forest.trees.size() << ", nodes " << built.forest.node_count() << "\n";
    } else if (*export_cmd) {
      pipeline::export_stage(out_dir, tree::parse_kind(kind_name), kg_opt);
      std::cout << pipeline::kg_path(out_dir, tree::parse_kind(kind_name)).string() << "\n";
    } else if (*serve_cmd) {
      return serve(out_dir, addr);
    } else if (*run_all) {
      const auto cfg = pipeline::load_config(config_path);
      pipeline::run_all(cfg);
      std::cout << "wrote " << cfg.out_dir.string() << " (config " << cfg.hash() << ")\n";
      if (then_serve) return serve(cfg.out_dir, cfg.bind_address);
    }
  } catch (const pipeline::StageError& e) {
    std::cerr << "insightkg: " << pipeline::to_string(e.stage()) << " failed [" << to_string(e.code())
              << "]: " << e.what() << "\n";
    return pipeline::exit_code(e.stage());
  } catch (const Error& e) {
    std::cerr << "insightkg: error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
