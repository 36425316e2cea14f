#pragma once

// Generated and hand-built fixtures shared by unit and acceptance tests.

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "insightkg/classifier.hpp"
#include "insightkg/corpus.hpp"
#include "insightkg/insight.hpp"
#include "insightkg/relevance.hpp"
#include "insightkg/trees.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace fixtures {

using ikg::Label;

struct BinaryProblem {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  double C = 1.0;
  double gamma = 1.0;
};

// At most 40 points in the plane labelled by a random line with 10% flips.
inline BinaryProblem random_binary_problem(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0), coin(0.0, 1.0);
  BinaryProblem p;
  const int n = std::uniform_int_distribution<int>(6, 40)(rng);
  const double a = u(rng), b = u(rng), c = 0.5 * u(rng);
  for (int i = 0; i < n; ++i) {
    const double x0 = u(rng), x1 = u(rng);
    int label = a * x0 + b * x1 + c >= 0 ? 1 : -1;
    if (coin(rng) < 0.1) label = -label;
    p.x.push_back({x0, x1});
    p.y.push_back(label);
  }
  p.y[0] = 1;
  p.y[1] = -1;
  const double Cs[] = {0.1, 1.0, 10.0};
  const double gammas[] = {0.25, 0.5, 1.0, 2.0};
  p.C = Cs[rng() % 3];
  p.gamma = gammas[rng() % 4];
  return p;
}

// k Gaussian blobs on a circle of radius `spread`, labelled 0..k-1.
inline ikg::classify::TrainingData blobs(std::mt19937& rng, int k, int per_class, double sigma, double spread) {
  std::normal_distribution<double> noise(0.0, sigma);
  ikg::classify::TrainingData d;
  for (int i = 0; i < per_class; ++i)
    for (int c = 0; c < k; ++c) {
      const double angle = 2.0 * M_PI * c / k;
      d.x.push_back({spread * std::cos(angle) + noise(rng), spread * std::sin(angle) + noise(rng)});
      d.y.push_back(static_cast<Label>(c));
    }
  return d;
}

// Four clusters at (+-1, +-1); same-sign quadrants are Resolved, the others Finding.
inline ikg::classify::TrainingData jittered_xor(std::mt19937& rng, int per_quadrant) {
  std::normal_distribution<double> noise(0.0, 0.15);
  ikg::classify::TrainingData d;
  for (int i = 0; i < per_quadrant; ++i)
    for (int q = 0; q < 4; ++q) {
      const double sx = (q & 1) ? 1.0 : -1.0, sy = (q & 2) ? 1.0 : -1.0;
      d.x.push_back({sx + noise(rng), sy + noise(rng)});
      d.y.push_back(sx * sy > 0 ? Label::resolved : Label::finding);
    }
  return d;
}

struct Confusion {
  std::vector<Label> truth, predicted;
};

// Ten sentences. Rows are true labels, columns predictions (R, N, F):
//   R: 3 1 0    N: 1 2 0    F: 1 1 1
inline Confusion confusion_fixture() {
  using L = Label;
  return Confusion{{L::resolved, L::resolved, L::resolved, L::resolved, L::neutral, L::neutral, L::neutral,
                    L::finding, L::finding, L::finding},
                   {L::resolved, L::resolved, L::resolved, L::neutral, L::resolved, L::neutral, L::neutral,
                    L::resolved, L::neutral, L::finding}};
}

// Seven papers p1..p7 (ids 1..7) whose citations give in-degrees
// p1=4, p2=2, p3=2 and 0 elsewhere:
//   p2,p3,p5,p6 -> p1   p4,p5 -> p2   p6,p7 -> p3
inline std::vector<nlohmann::json> citation_documents() {
  struct Spec {
    long long id;
    std::string title;
    std::string insight;
    std::vector<long long> cites;
  };
  const std::vector<Spec> specs = {
      {1, "A dataset for diverse explainable multi-hop question answering",
       "We present a multi-hop dataset with supporting facts. Future work may explore retrieval for multi-hop questions.", {}},
      {2, "Reading comprehension over multiple paragraphs",
       "We show that a reading comprehension model handles multi-hop questions. A limitation is that single-hop shortcuts remain.", {1}},
      {3, "Retrieval of evidence paragraphs",
       "We introduce dense retrieval of evidence paragraphs for multi-hop questions. It remains unclear whether retrieval scales to open domains.", {1}},
      {4, "Evaluation of single-hop shortcuts",
       "We show that single-hop shortcuts inflate evaluation scores. More robust evaluation metrics are needed.", {2}},
      {5, "Graph networks for reasoning chains",
       "We present a graph network for reasoning chains. We train the network for ten epochs.", {1, 2}},
      {6, "Question decomposition for retrieval",
       "We introduce question decomposition for open domain retrieval. Future work may explore decomposition for evaluation.", {1, 3}},
      {7, "Open domain retrieval at scale",
       "Our experiments demonstrate that open domain retrieval scales to millions of documents. Further study should address latency.", {3}},
  };
  std::vector<nlohmann::json> docs;
  for (const auto& s : specs) {
    testsupport::DocBuilder b;
    b.id = s.id;
    b.title = s.title;
    b.header("1 Introduction").para("This paper studies multi-hop reasoning on HotpotQA.");
    b.header("5 Conclusion").para(s.insight);
    for (auto c : s.cites) b.cites(c);
    b.cites(1000 + s.id);  // outside the subset
    docs.push_back(b.json());
  }
  return docs;
}

inline ikg::corpus::TopicSubset citation_subset() {
  std::istringstream in(testsupport::jsonl(citation_documents()));
  return ikg::corpus::filter_by_topic(in, "HotpotQA");
}

// Hand-labelled bundles for the seven papers: the first insight sentence is
// Resolved, the second a Finding, except p5 whose second sentence is neutral.
inline std::vector<ikg::insight::InsightBundle> citation_bundles() {
  std::vector<ikg::insight::InsightBundle> out;
  for (const auto& p : citation_subset().papers) {
    const auto cut = p.insight_text.find(". ") + 1;
    ikg::insight::InsightBundle b;
    b.paper_id = p.corpus_id;
    b.resolved_text = p.insight_text.substr(0, cut);
    b.resolved_sentences = {0};
    if (p.corpus_id != 5) {
      b.finding_text = p.insight_text.substr(cut + 1);
      b.finding_sentences = {1};
    }
    out.push_back(b);
  }
  return out;
}

// Seven-paper relevance matrix (ids 1..7) tuned so the best chains run
// p1 -> p2 -> p4 and p1 -> p3 -> p7. Unlisted entries are masked.
inline ikg::relevance::RelevanceMatrix tuned_matrix() {
  ikg::relevance::RelevanceMatrix m({1, 2, 3, 4, 5, 6, 7});
  auto set = [&](long long from, long long to, double v) { m.set(*m.index_of(from), *m.index_of(to), v); };
  set(1, 2, 0.91);  // multi-hop side
  set(1, 3, 0.87);  // retrieval side
  set(1, 5, 0.40);
  set(1, 6, 0.35);
  set(2, 4, 0.82);
  set(2, 5, 0.30);
  set(2, 1, 0.55);
  set(3, 7, 0.79);
  set(3, 6, 0.25);
  set(3, 1, 0.50);
  set(4, 2, 0.20);
  set(5, 6, 0.15);
  set(6, 7, 0.10);
  set(7, 3, 0.05);
  return m;
}

// Random DAG on ids 1..n: edges only from higher to lower ids.
inline std::set<ikg::corpus::CitationEdge> random_dag(std::mt19937& rng, int n, double density) {
  std::set<ikg::corpus::CitationEdge> edges;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int a = 1; a <= n; ++a)
    for (int b = 1; b < a; ++b)
      if (coin(rng) < density) edges.insert({a, b});
  return edges;
}

// Random matrix on ids 10, 20, ...; entries on a coarse grid so ties occur.
inline ikg::relevance::RelevanceMatrix random_matrix(std::mt19937& rng, int n, double mask_rate) {
  std::vector<ikg::CorpusId> ids;
  for (int i = 1; i <= n; ++i) ids.push_back(10 * i);
  ikg::relevance::RelevanceMatrix m(ids);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> grid(-10, 10);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && coin(rng) >= mask_rate) m.set(i, j, grid(rng) / 10.0);
  return m;
}

// A built forest in the reference oracle's node form.
inline std::vector<oracle::RefNode> as_ref(const ikg::tree::Forest& f) {
  std::vector<oracle::RefNode> out;
  for (std::size_t t = 0; t < f.trees.size(); ++t)
    for (const auto& n : f.trees[t].nodes)
      out.push_back(oracle::RefNode{static_cast<int>(t), n.paper_id,
                                    n.parent ? f.trees[t].nodes[*n.parent].paper_id : -1,
                                    static_cast<int>(n.depth)});
  return out;
}

}  // namespace fixtures
