#pragma once

// Hierarchical forest construction.
//
// Both forest kinds share one engine:
//   1. pick the best not-yet-selected paper as the root of tree n (n = 1..N);
//   2. for a node at depth t < T, rank its eligible, not-yet-selected
//      neighbours and attach the best M as leaves;
//   3. expand leaves in turn; a node with no eligible neighbour ends its branch.
// A paper is selected at most once across the whole forest, and every
// ranking breaks ties by ascending corpus id.

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "insightkg/corpus.hpp"
#include "insightkg/error.hpp"
#include "insightkg/relevance.hpp"

namespace ikg::tree {

struct TreeParams {
  std::size_t N = 1;  // maximum number of roots (trees)
  std::size_t M = 2;  // maximum leaves per node
  std::size_t T = 3;  // maximum depth, root at depth 1

  void validate() const {
    if (N < 1) fail(ErrorCode::invalid_argument, "N must be >= 1");
    if (M < 1) fail(ErrorCode::invalid_argument, "M must be >= 1");
    if (T < 1) fail(ErrorCode::invalid_argument, "T must be >= 1");
  }

  bool operator==(const TreeParams&) const = default;
};

enum class ForestKind { inheritance, relevance };

constexpr std::string_view to_string(ForestKind k) {
  return k == ForestKind::inheritance ? "inheritance" : "relevance";
}

inline ForestKind parse_kind(const std::string& s) {
  if (s == "inheritance") return ForestKind::inheritance;
  if (s == "relevance") return ForestKind::relevance;
  fail(ErrorCode::invalid_argument, "kind must be inheritance or relevance, got '" + s + "'");
}

enum class ExpansionOrder { bfs, dfs };

struct ForestNode {
  CorpusId paper_id = 0;
  std::size_t depth = 1;
  std::optional<std::size_t> parent;  // index into the same tree's nodes
  double score = 0.0;                 // ranking score that selected this node
  std::size_t leaf_seq = 0;           // 1-based position among its siblings; 0 for roots

  bool operator==(const ForestNode&) const = default;
};

struct Tree {
  std::vector<ForestNode> nodes;  // construction order, root first
  bool operator==(const Tree&) const = default;
};

struct Forest {
  ForestKind kind = ForestKind::inheritance;
  TreeParams params;
  std::vector<Tree> trees;

  std::size_t node_count() const {
    std::size_t n = 0;
    for (const auto& t : trees) n += t.nodes.size();
    return n;
  }

  bool operator==(const Forest&) const = default;
};

struct Candidate {
  CorpusId id = 0;
  double score = 0.0;
  bool operator==(const Candidate&) const = default;
};

struct TraceStep {
  std::size_t tree = 0;          // n, 1-based
  std::optional<CorpusId> node;  // expanded node; nullopt for root selection
  std::size_t depth = 0;         // t of the expanded node; 0 for root selection
  std::vector<Candidate> candidates;
  std::vector<CorpusId> chosen;

  bool operator==(const TraceStep&) const = default;
};

struct ForestBuildTrace {
  std::vector<TraceStep> steps;
  bool operator==(const ForestBuildTrace&) const = default;
};

struct ForestBuild {
  Forest forest;
  ForestBuildTrace trace;
};

namespace detail {

inline bool ranks_before(const Candidate& a, const Candidate& b) {
  return a.score != b.score ? a.score > b.score : a.id < b.id;
}

using RootScore = std::function<std::optional<double>(CorpusId)>;
using Neighbours = std::function<std::vector<Candidate>(CorpusId)>;

inline ForestBuild build(ForestKind kind, const std::vector<CorpusId>& papers, const RootScore& root_score,
                         const Neighbours& neighbours, const TreeParams& params, ExpansionOrder order) {
  params.validate();
  ForestBuild out;
  out.forest.kind = kind;
  out.forest.params = params;
  std::set<CorpusId> selected;

  auto rank = [&](std::vector<Candidate> cands) {
    std::erase_if(cands, [&](const Candidate& c) { return selected.count(c.id) != 0; });
    std::sort(cands.begin(), cands.end(), ranks_before);
    return cands;
  };

  for (std::size_t n = 1; n <= params.N; ++n) {
    std::vector<Candidate> roots;
    for (auto id : papers)
      if (auto s = root_score(id)) roots.push_back(Candidate{id, *s});
    roots = rank(std::move(roots));
    if (roots.empty()) break;
    out.trace.steps.push_back(TraceStep{n, std::nullopt, 0, roots, {roots.front().id}});
    selected.insert(roots.front().id);

    Tree tree;
    tree.nodes.push_back(ForestNode{roots.front().id, 1, std::nullopt, roots.front().score, 0});

    // Attaches the best M eligible neighbours of node `at`; returns their indices.
    auto expand = [&](std::size_t at) {
      std::vector<std::size_t> added;
      const ForestNode node = tree.nodes[at];
      if (node.depth >= params.T) return added;
      auto cands = rank(neighbours(node.paper_id));
      TraceStep step{n, node.paper_id, node.depth, cands, {}};
      for (std::size_t m = 0; m < cands.size() && m < params.M; ++m) {
        selected.insert(cands[m].id);
        step.chosen.push_back(cands[m].id);
        added.push_back(tree.nodes.size());
        tree.nodes.push_back(ForestNode{cands[m].id, node.depth + 1, at, cands[m].score, m + 1});
      }
      out.trace.steps.push_back(std::move(step));
      return added;
    };

    if (order == ExpansionOrder::bfs) {
      std::deque<std::size_t> queue{0};
      while (!queue.empty()) {
        const auto at = queue.front();
        queue.pop_front();
        for (auto child : expand(at)) queue.push_back(child);
      }
    } else {
      std::function<void(std::size_t)> visit = [&](std::size_t at) {
        for (auto child : expand(at)) visit(child);
      };
      visit(0);
    }
    out.forest.trees.push_back(std::move(tree));
  }
  return out;
}

}  // namespace detail

struct CitationGraph {
  std::vector<CorpusId> papers;  // every paper in the subset, ascending
  std::set<corpus::CitationEdge> edges;

  static CitationGraph from_subset(const corpus::TopicSubset& subset) {
    return CitationGraph{subset.ids(), subset.citation_edges};
  }
};

struct InheritanceOptions {
  ExpansionOrder order = ExpansionOrder::bfs;
  // When set, ranks by these counts instead of in-subset in-degree.
  std::optional<std::map<CorpusId, double>> citation_counts;
};

// Roots and leaves ranked by how often a paper is cited; the leaves of a
// node are the papers that cite it.
inline ForestBuild build_inheritance_forest(const CitationGraph& graph, const TreeParams& params,
                                            const InheritanceOptions& opt = {}) {
  std::map<CorpusId, double> cited_by;
  std::map<CorpusId, std::vector<CorpusId>> citers;
  for (auto id : graph.papers) cited_by[id] = 0.0;
  for (const auto& e : graph.edges) {
    if (!cited_by.count(e.citing) || !cited_by.count(e.cited) || e.citing == e.cited) continue;
    cited_by[e.cited] += 1.0;
    citers[e.cited].push_back(e.citing);
  }
  auto count = [&](CorpusId id) {
    if (opt.citation_counts) {
      auto it = opt.citation_counts->find(id);
      return it == opt.citation_counts->end() ? 0.0 : it->second;
    }
    return cited_by.at(id);
  };
  std::vector<CorpusId> papers(graph.papers);
  std::sort(papers.begin(), papers.end());
  papers.erase(std::unique(papers.begin(), papers.end()), papers.end());
  return detail::build(
      ForestKind::inheritance, papers, [&](CorpusId id) -> std::optional<double> { return count(id); },
      [&](CorpusId id) {
        std::vector<Candidate> out;
        auto it = citers.find(id);
        if (it != citers.end())
          for (auto c : it->second) out.push_back(Candidate{c, count(c)});
        return out;
      },
      params, opt.order);
}

struct RelevanceOptions {
  ExpansionOrder order = ExpansionOrder::bfs;
  relevance::ChainAverage root_average = relevance::ChainAverage::outgoing;
};

// Roots ranked by average chain score; the leaves of a node are the papers
// whose Resolved text best matches the node's Finding text.
inline ForestBuild build_relevance_forest(const relevance::RelevanceMatrix& matrix, const TreeParams& params,
                                          const RelevanceOptions& opt = {}) {
  params.validate();
  if (matrix.size() == 0 || matrix.fully_masked()) {
    ForestBuild empty;
    empty.forest.kind = ForestKind::relevance;
    empty.forest.params = params;
    return empty;
  }
  std::map<CorpusId, std::optional<double>> averages;
  for (auto id : matrix.paper_ids()) averages[id] = relevance::average_chain_score(matrix, id, opt.root_average);
  return detail::build(
      ForestKind::relevance, matrix.paper_ids(), [&](CorpusId id) { return averages.at(id); },
      [&](CorpusId id) {
        std::vector<Candidate> out;
        const auto i = *matrix.index_of(id);
        for (std::size_t j = 0; j < matrix.size(); ++j)
          if (matrix.valid(i, j)) out.push_back(Candidate{matrix.id(j), matrix.score(i, j)});
        return out;
      },
      params, opt.order);
}

// --- serialization -------------------------------------------------------

inline nlohmann::json to_json(const TreeParams& p) { return {{"N", p.N}, {"M", p.M}, {"T", p.T}}; }

inline nlohmann::json to_json(const Forest& f) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : f.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes)
      nodes.push_back({{"paper_id", n.paper_id},
                       {"depth", n.depth},
                       {"parent", n.parent ? nlohmann::json(t.nodes[*n.parent].paper_id) : nlohmann::json()},
                       {"score", n.score},
                       {"leaf_seq", n.leaf_seq}});
    trees.push_back({{"nodes", nodes}});
  }
  return {{"kind", to_string(f.kind)}, {"params", to_json(f.params)}, {"trees", trees}};
}

inline Forest forest_from_json(const nlohmann::json& j) {
  try {
    Forest f;
    f.kind = parse_kind(j.at("kind").get<std::string>());
    f.params = TreeParams{j.at("params").at("N").get<std::size_t>(), j.at("params").at("M").get<std::size_t>(),
                          j.at("params").at("T").get<std::size_t>()};
    for (const auto& t : j.at("trees")) {
      Tree tree;
      std::map<CorpusId, std::size_t> position;
      for (const auto& n : t.at("nodes")) {
        ForestNode node;
        node.paper_id = n.at("paper_id").get<CorpusId>();
        node.depth = n.at("depth").get<std::size_t>();
        if (!n.at("parent").is_null()) {
          auto it = position.find(n.at("parent").get<CorpusId>());
          if (it == position.end()) fail(ErrorCode::input_error, "forest node precedes its parent");
          node.parent = it->second;
        }
        node.score = n.at("score").get<double>();
        node.leaf_seq = n.at("leaf_seq").get<std::size_t>();
        position[node.paper_id] = tree.nodes.size();
        tree.nodes.push_back(node);
      }
      f.trees.push_back(std::move(tree));
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::input_error, std::string("malformed forest file: ") + e.what());
  }
}

inline nlohmann::json to_json(const TraceStep& s) {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : s.candidates) cands.push_back({{"id", c.id}, {"score", c.score}});
  return {{"tree", s.tree},
          {"node", s.node ? nlohmann::json(*s.node) : nlohmann::json()},
          {"depth", s.depth},
          {"candidates", cands},
          {"chosen", s.chosen}};
}

inline void write_trace(const ForestBuildTrace& trace, std::ostream& out) {
  for (const auto& s : trace.steps) out << to_json(s).dump() << '\n';
}

}  // namespace ikg::tree
