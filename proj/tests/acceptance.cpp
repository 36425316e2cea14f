// Acceptance gate: one PASS/FAIL line per criterion. Exit status is
// non-zero when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <thread>

#include "insightkg/server.hpp"
#include "oracles.hpp"
#include "workspace.hpp"

using namespace ikg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Check {
  bool ok = true;
  std::string first_failure;
  void operator()(bool cond, const std::string& what) {
    if (!cond && ok) first_failure = what;
    ok = ok && cond;
  }
  Outcome outcome(const std::string& summary) const { return {ok, ok ? summary : first_failure}; }
};

int failures = 0;

void criterion(const std::string& name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (limit_seconds > 0 && secs >= limit_seconds) {
    o.detail += " (over the " + std::to_string(static_cast<int>(limit_seconds)) + " s limit)";
    o.pass = false;
  }
  failures += !o.pass;
  std::printf("%s  %-28s %6.2fs  %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
  std::fflush(stdout);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ------------------------------------------------------------------------

Outcome dataset_accounting() {
  std::ifstream in(workspace::label_file());
  const auto c = count_labels(read_label_file(in));
  Check check;
  check(c.train == std::array<std::size_t, 3>{532, 334, 259}, "train counts differ");
  check(c.test == std::array<std::size_t, 3>{165, 121, 89}, "test counts differ");
  check(c.train_total() == 1125 && c.test_total() == 375, "totals differ");
  return check.outcome("train 532/334/259 = 1125, test 165/121/89 = 375");
}

Outcome svm_oracle() {
  std::mt19937 rng(424242);
  Check check;
  double worst_gap = 0.0, default_gap = 0.0;
  std::size_t probes = 0;
  for (int problem = 0; problem < 50; ++problem) {
    const auto p = fixtures::random_binary_problem(rng);
    for (bool rbf : {false, true}) {
      const svm::Kernel kernel{rbf ? svm::KernelKind::rbf : svm::KernelKind::linear, p.gamma};
      const auto k = svm::KernelMatrix::compute(p.x, kernel);
      std::vector<std::vector<double>> K(p.x.size(), std::vector<double>(p.x.size()));
      for (std::size_t i = 0; i < p.x.size(); ++i)
        for (std::size_t j = 0; j < p.x.size(); ++j) K[i][j] = oracle::kernel_value(rbf, p.gamma, p.x[i], p.x[j]);
      const auto ref = oracle::solve_dual(K, p.y, p.C);
      // Training uses tolerance 1e-3; a gap of 1e-6 needs a tighter stop.
      const auto got = svm::solve_smo(k, p.y, p.C, svm::SmoOptions{1e-6, 1000000});
      const auto loose = svm::solve_smo(k, p.y, p.C);
      default_gap = std::max(default_gap, std::abs(oracle::objective(K, p.y, loose.alpha) - ref.objective));
      const double gap = std::abs(oracle::objective(K, p.y, got.alpha) - ref.objective);
      worst_gap = std::max(worst_gap, gap);
      const std::string tag = "problem " + std::to_string(problem) + (rbf ? " rbf" : " linear");
      check(got.converged, tag + ": did not converge");
      check(gap <= 1e-6, tag + ": objective gap " + num(gap));

      auto decision = [&](const std::vector<double>& alpha, double bias, const std::vector<double>& x) {
        double f = bias;
        for (std::size_t i = 0; i < p.x.size(); ++i) f += alpha[i] * p.y[i] * oracle::kernel_value(rbf, p.gamma, p.x[i], x);
        return f;
      };
      for (int a = 0; a <= 20; ++a)
        for (int b = 0; b <= 20; ++b) {
          const std::vector<double> x = {-2.5 + 0.25 * a, -2.5 + 0.25 * b};
          const bool mine = decision(got.alpha, got.bias, x) >= 0;
          const bool theirs = decision(ref.alpha, ref.bias, x) >= 0;
          check(mine == theirs, tag + ": probe (" + num(x[0]) + ", " + num(x[1]) + ") disagrees");
          ++probes;
        }
    }
  }
  return check.outcome("100 solves at tol 1e-6, worst objective gap " + num(worst_gap) + ", " +
                       std::to_string(probes) + " probes agree (tol 1e-3 gap " + num(default_gap) + ")");
}

Outcome classifier_capability() {
  std::mt19937 rng(77);
  Check check;
  const auto xor_data = fixtures::jittered_xor(rng, 25);
  const auto xor_model = classify::train(xor_data);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < xor_data.x.size(); ++i) correct += xor_model.predict(xor_data.x[i]) == xor_data.y[i];
  const double accuracy = static_cast<double>(correct) / xor_data.x.size();
  check(xor_model.kernel.kind == svm::KernelKind::rbf, "xor model is not rbf");
  check(accuracy >= 0.99, "xor training accuracy " + num(accuracy));

  // 300 points, alternate ones held out.
  const auto all = fixtures::blobs(rng, 3, 100, 0.6, 3.0);
  classify::TrainingData train, test;
  for (std::size_t i = 0; i < all.x.size(); ++i) {
    auto& part = (i / 3) % 2 == 0 ? train : test;
    part.x.push_back(all.x[i]);
    part.y.push_back(all.y[i]);
  }
  const auto model = classify::train(train);
  std::vector<Label> predicted;
  for (const auto& x : test.x) predicted.push_back(model.predict(x));
  const double f1 = classify::evaluate_predictions(test.y, predicted).macro_f1;
  check(f1 >= 0.95, "blob held-out macro-F1 " + num(f1));
  return check.outcome("xor accuracy " + num(accuracy) + ", blob held-out macro-F1 " + num(f1));
}

Outcome metrics_exactness() {
  const auto fx = fixtures::confusion_fixture();
  const auto r = classify::evaluate_predictions(fx.truth, fx.predicted);
  Check check;
  // By hand from the confusion rows R[3,1,0] N[1,2,0] F[1,1,1].
  const std::array<double, 3> precision = {3.0 / 5.0, 2.0 / 4.0, 1.0 / 1.0};
  const std::array<double, 3> recall = {3.0 / 4.0, 2.0 / 3.0, 1.0 / 3.0};
  const std::array<double, 3> f1 = {6.0 / 9.0, 4.0 / 7.0, 2.0 / 4.0};
  check(r.precision == precision, "precision differs");
  check(r.recall == recall, "recall differs");
  check(r.f1 == f1, "f1 differs");
  check(r.support == std::array<std::size_t, 3>{4, 3, 3}, "support differs");
  check(r.macro_f1 == (f1[0] + f1[1] + f1[2]) / 3.0, "macro-F1 differs");
  check(std::abs(r.macro_f1 - 73.0 / 126.0) <= 1e-15, "macro-F1 is not 73/126");
  return check.outcome("P 3/5 1/2 1, R 3/4 2/3 1/3, F1 2/3 4/7 1/2, macro 73/126");
}

Outcome relevance_oracle() {
  std::mt19937 rng(9090);
  const std::vector<std::string> words = {"retrieval", "reasoning", "multi-hop", "graph", "question", "answer",
                                          "evidence", "passage", "dataset", "benchmark", "model", "latency",
                                          "scale", "bias", "shortcut", "supervision", "chain", "entity"};
  const std::vector<std::string> filler = {"the", "of", "and", "we", "it", "is"};
  auto sentence = [&](bool content) {
    std::string s;
    const int n = std::uniform_int_distribution<int>(2, 8)(rng);
    for (int i = 0; i < n; ++i) {
      const auto& pool = content && rng() % 3 ? words : filler;
      s += (i ? " " : "") + pool[rng() % pool.size()];
    }
    return s + ".";
  };
  auto text = [&]() -> std::string {
    const auto r = rng() % 10;
    if (r == 0) return "";
    if (r == 1) return sentence(false);  // stopwords only
    return sentence(true);
  };
  Check check;
  std::size_t valid = 0, masked = 0;
  double worst = 0.0;
  for (int round = 0; round < 20; ++round) {
    const int n = std::uniform_int_distribution<int>(2, 10)(rng);
    std::vector<insight::InsightBundle> bundles;
    text::DocumentFrequency df;
    for (int i = 0; i < n; ++i) {
      insight::InsightBundle b;
      b.paper_id = 100 + 7 * i;
      b.resolved_text = text();
      b.finding_text = text();
      df.add(b.resolved_text + " " + b.finding_text);
      bundles.push_back(b);
    }
    if (std::all_of(bundles.begin(), bundles.end(), [](const auto& b) { return b.flagged(); }))
      bundles[0].finding_text = "graph retrieval";
    const auto provider = embed::make_provider(embed::ProviderConfig{}, df);
    auto shuffled = bundles;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto m = relevance::build_relevance_matrix(shuffled, *provider);

    for (int i = 0; i < n; ++i) {
      const auto f = provider->embed(bundles[i].finding_text).values;
      for (int j = 0; j < n; ++j) {
        const auto r = provider->embed(bundles[j].resolved_text).values;
        double dot = 0, nf = 0, nr = 0;
        for (std::size_t d = 0; d < f.size(); ++d) dot += f[d] * r[d], nf += f[d] * f[d], nr += r[d] * r[d];
        const bool expect_valid = i != j && nf > 0 && nr > 0;
        const auto mi = m.index_of(bundles[i].paper_id), mj = m.index_of(bundles[j].paper_id);
        const std::string tag = "round " + std::to_string(round) + " entry " + std::to_string(i) + "," +
                                std::to_string(j);
        check(mi && mj, tag + ": paper missing from matrix");
        if (!mi || !mj) continue;
        check(m.valid(*mi, *mj) == expect_valid, tag + ": mask differs");
        if (expect_valid && m.valid(*mi, *mj)) {
          const double diff = std::abs(m.score(*mi, *mj) - dot / std::sqrt(nf * nr));
          worst = std::max(worst, diff);
          check(diff <= 1e-9, tag + ": score off by " + num(diff));
          ++valid;
        } else {
          ++masked;
        }
      }
    }
  }
  return check.outcome(std::to_string(valid) + " valid entries within " + num(worst) + ", " + std::to_string(masked) +
                       " masks match");
}

bool forest_rules_hold(const tree::Forest& f) {
  std::set<CorpusId> seen;
  for (const auto& t : f.trees)
    for (const auto& n : t.nodes)
      if (!seen.insert(n.paper_id).second || n.depth > f.params.T || n.depth < 1) return false;
  return f.trees.size() <= f.params.N;
}

Outcome tree_oracle() {
  std::mt19937 rng(31337);
  Check check;
  std::size_t nodes = 0;
  auto random_params = [&] {
    return tree::TreeParams{static_cast<std::size_t>(rng() % 4 + 1), static_cast<std::size_t>(rng() % 3 + 1),
                            static_cast<std::size_t>(rng() % 5 + 1)};
  };
  for (int round = 0; round < 100; ++round) {
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    const auto params = random_params();
    const auto edges = fixtures::random_dag(rng, n, std::uniform_real_distribution<double>(0.1, 0.6)(rng));
    std::vector<long long> papers;
    for (int i = 1; i <= n; ++i) papers.push_back(i);
    auto in_degree = [&](long long p) {
      double d = 0;
      for (const auto& e : edges) d += e.cited == p;
      return d;
    };
    const auto built = tree::build_inheritance_forest(tree::CitationGraph{{papers.begin(), papers.end()}, edges}, params);
    const auto ref = oracle::replay_forest(
        papers, [&](long long p) { return std::optional<double>(in_degree(p)); },
        [&](long long v) {
          std::vector<std::pair<long long, double>> out;
          for (const auto& e : edges)
            if (e.cited == v) out.emplace_back(e.citing, in_degree(e.citing));
          return out;
        },
        static_cast<int>(params.N), static_cast<int>(params.M), static_cast<int>(params.T));
    check(fixtures::as_ref(built.forest) == ref, "citation DAG " + std::to_string(round) + " differs from replay");
    check(forest_rules_hold(built.forest), "citation DAG " + std::to_string(round) + " breaks uniqueness or depth");
    nodes += built.forest.node_count();
  }
  for (int round = 0; round < 100; ++round) {
    const int n = std::uniform_int_distribution<int>(2, 12)(rng);
    const auto params = random_params();
    const auto m = fixtures::random_matrix(rng, n, std::uniform_real_distribution<double>(0.0, 0.9)(rng));
    std::vector<long long> ids(m.paper_ids().begin(), m.paper_ids().end());
    auto row = [&](long long p) {
      const std::size_t i = std::find(ids.begin(), ids.end(), p) - ids.begin();
      std::vector<std::pair<long long, double>> out;
      for (std::size_t j = 0; j < ids.size(); ++j)
        if (m.valid(i, j)) out.emplace_back(ids[j], m.score(i, j));
      return out;
    };
    auto row_mean = [&](long long p) -> std::optional<double> {
      const auto r = row(p);
      if (r.empty()) return std::nullopt;
      double sum = 0;
      for (const auto& [id, v] : r) sum += v;
      return sum / static_cast<double>(r.size());
    };
    const auto built = tree::build_relevance_forest(m, params);
    const auto ref = oracle::replay_forest(ids, row_mean, row, static_cast<int>(params.N), static_cast<int>(params.M),
                                           static_cast<int>(params.T));
    check(fixtures::as_ref(built.forest) == ref, "matrix " + std::to_string(round) + " differs from replay");
    check(forest_rules_hold(built.forest), "matrix " + std::to_string(round) + " breaks uniqueness or depth");
    nodes += built.forest.node_count();
  }
  return check.outcome("100 DAGs + 100 matrices match replay (" + std::to_string(nodes) + " nodes)");
}

bool has_branch(const tree::Forest& f, std::vector<CorpusId> path) {
  for (const auto& t : f.trees) {
    std::map<CorpusId, CorpusId> parent;
    for (const auto& n : t.nodes)
      if (n.parent) parent[n.paper_id] = t.nodes[*n.parent].paper_id;
    bool ok = !t.nodes.empty() && t.nodes[0].paper_id == path[0];
    for (std::size_t i = 1; ok && i < path.size(); ++i) ok = parent.count(path[i]) && parent[path[i]] == path[i - 1];
    if (ok) return true;
  }
  return false;
}

Outcome branch_structures() {
  Check check;
  const tree::TreeParams params{1, 2, 3};
  const auto inh = tree::build_inheritance_forest(tree::CitationGraph::from_subset(fixtures::citation_subset()), params).forest;
  check(inh.trees.size() == 1, "citation forest has " + std::to_string(inh.trees.size()) + " trees");
  check(has_branch(inh, {1, 2, 4}), "citation branch p1-p2-p4 missing");
  check(has_branch(inh, {1, 3, 7}), "citation branch p1-p3-p7 missing");
  const auto rel = tree::build_relevance_forest(fixtures::tuned_matrix(), params).forest;
  check(rel.trees.size() == 1, "relevance forest has " + std::to_string(rel.trees.size()) + " trees");
  check(has_branch(rel, {1, 2, 4}), "relevance path p1-p2-p4 missing");
  check(has_branch(rel, {1, 3, 7}), "relevance path p1-p3-p7 missing");
  return check.outcome("p1>p2>p4 and p1>p3>p7 in both forests");
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(INSIGHTKG_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome end_to_end(const fs::path& root, const fs::path& model) {
  Check check;
  const auto permuted = root / "permuted.jsonl";
  workspace::write_permuted(workspace::synthetic_corpus(), permuted, 20231);
  std::vector<std::pair<std::string, fs::path>> runs = {
      {"first", workspace::synthetic_corpus()}, {"second", workspace::synthetic_corpus()}, {"permuted", permuted}};
  std::map<std::string, std::map<std::string, std::string>> outputs;
  double slowest = 0.0;
  for (const auto& [name, corpus] : runs) {
    const auto cfg = workspace::write_config(root / (name + ".json"),
                                             workspace::base_config(corpus, model, root / ("out_" + name)));
    const auto start = std::chrono::steady_clock::now();
    const int code = run_cli("run-all --config '" + cfg.string() + "'");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    slowest = std::max(slowest, secs);
    check(code == 0, name + " run exited with " + std::to_string(code));
    check(secs < 60.0, name + " run took " + num(secs) + " s");
    for (const char* f : {"kg_inheritance.json", "kg_relevance.json"}) {
      const auto p = root / ("out_" + name) / f;
      check(fs::exists(p), name + ": " + f + " missing");
      outputs[name][f] = testsupport::slurp(p);
    }
  }
  check(outputs["first"] == outputs["second"], "reruns differ");
  check(outputs["first"] == outputs["permuted"], "permuted input changes the graphs");
  check(!nlohmann::json::parse(outputs["first"]["kg_relevance.json"])["nodes"].empty(), "relevance graph is empty");
  return check.outcome("3 runs, slowest " + num(slowest) + " s, both graphs byte-identical");
}

Outcome api_contract(const fs::path& root) {
  Check check;
  const testsupport::SchemaValidator schema(
      nlohmann::json::parse(testsupport::slurp(testsupport::source_dir() / "schemas/kg.schema.json")));
  std::size_t validated = 0;
  for (const auto& out : {root / "fixture" / "out", root / "out_first"}) {
    service::KgStore store(service::load_snapshot(out));
    service::HttpServer server(store);
    const int port = server.bind("127.0.0.1:0");
    std::thread t([&] { server.listen(); });
    server.wait_until_ready();
    httplib::Client client("127.0.0.1", port);
    for (const char* kind : {"inheritance", "relevance"})
      for (int N = 1; N <= 3; ++N)
        for (int M = 1; M <= 3; ++M)
          for (int T = 1; T <= 3; ++T) {
            const auto path = std::string("/kg/") + kind + "?N=" + std::to_string(N) + "&M=" + std::to_string(M) +
                              "&T=" + std::to_string(T);
            const auto r = client.Get(path.c_str());
            check(r && r->status == 200, path + " did not return 200");
            if (!r || r->status != 200) continue;
            const auto errors = schema.validate(nlohmann::json::parse(r->body));
            check(errors.empty(), path + ": " + (errors.empty() ? "" : errors[0]));
            ++validated;
          }
    for (const char* bad : {"/kg/relevance?T=0", "/kg/inheritance?N=0", "/kg/inheritance?M=x", "/kg/relevance?N=-3"}) {
      const auto r = client.Get(bad);
      check(r && r->status == 400, std::string(bad) + " is not 400");
      if (r) check(nlohmann::json::parse(r->body).contains("field"), std::string(bad) + " names no field");
    }
    for (const char* missing : {"/paper/999999", "/matrix/row/999999"}) {
      const auto r = client.Get(missing);
      check(r && r->status == 404, std::string(missing) + " is not 404");
    }
    if (out.parent_path().filename() == "fixture") {
      const auto r = client.Get("/kg/inheritance?N=1&M=2&T=3");
      check(r && r->body == testsupport::slurp(testsupport::data_dir() / "kg_citation_golden.json"),
            "fixture graph differs from the golden file");
    }
    server.stop();
    t.join();
  }
  return check.outcome(std::to_string(validated) + " graphs schema-valid, 400 and 404 as specified");
}

}  // namespace

int main() {
  testsupport::TempDir root("acceptance");
  criterion("dataset accounting", 5, dataset_accounting);
  criterion("svm oracle equivalence", 60, svm_oracle);
  criterion("classifier capability", 60, classifier_capability);
  criterion("metrics exactness", 0, metrics_exactness);
  criterion("relevance matrix oracle", 0, relevance_oracle);
  criterion("tree builder oracle", 120, tree_oracle);
  criterion("branch structures", 0, branch_structures);

  fs::path model;
  try {
    model = workspace::freeze_model(root.path() / "model");
    fs::create_directories(root.path() / "fixture");
    workspace::build_citation_snapshot(root.path() / "fixture" / "out");
  } catch (const std::exception& e) {
    std::printf("setup failed: %s\n", e.what());
  }
  criterion("end-to-end determinism", 0, [&] { return end_to_end(root.path(), model); });
  criterion("api contract", 0, [&] { return api_contract(root.path()); });

  std::printf("%s: %d failing\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
