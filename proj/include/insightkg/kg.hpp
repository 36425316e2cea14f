#pragma once

// Decorates a forest into the exported knowledge-graph schema:
//   {"kind", "params": {N, M, T, topic},
//    "nodes": [{"id", "label", "title": {"keywords", "issue_resolved", "issue_finding"}}],
//    "edges": [{"from", "to", "label", "title", "arrows": "to"}]}
// Inheritance edges run citing -> cited; relevance edges run from the paper
// whose Finding is matched to the paper whose Resolved text matches it.

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>
#include <string>
#include <vector>

#include <json.hpp>

#include "insightkg/corpus.hpp"
#include "insightkg/error.hpp"
#include "insightkg/insight.hpp"
#include "insightkg/text.hpp"
#include "insightkg/trees.hpp"

namespace ikg::kg {

struct KgOptions {
  std::size_t keywords = 5;
  std::size_t vocabulary = 3;
  std::size_t tooltip_chars = 600;
};

struct ScoredTerm {
  std::string term;
  double score = 0.0;
};

inline bool is_keyword_candidate(const std::string& term) {
  return !std::all_of(term.begin(), term.end(), [](char c) { return (c >= '0' && c <= '9') || c == '-'; });
}

// Every candidate term of `text` with its TF-IDF weight, best first
// (ties alphabetical). Stopwords and bare numbers never qualify.
inline std::vector<ScoredTerm> ranked_terms(std::string_view text, const text::DocumentFrequency& df) {
  std::map<std::string, double> tf;
  for (auto& t : text::content_tokens(text))
    if (is_keyword_candidate(t)) tf[t] += 1.0;
  std::vector<ScoredTerm> out;
  for (const auto& [term, count] : tf) out.push_back(ScoredTerm{term, count * df.idf(term)});
  std::sort(out.begin(), out.end(), [](const ScoredTerm& a, const ScoredTerm& b) {
    return a.score != b.score ? a.score > b.score : a.term < b.term;
  });
  return out;
}

inline std::vector<ScoredTerm> top_terms(const corpus::PaperRecord& paper, const text::DocumentFrequency& df,
                                         std::size_t k) {
  auto terms = ranked_terms(corpus::profile_text(paper), df);
  if (terms.size() > k) terms.resize(k);
  return terms;
}

inline std::vector<std::string> extract_keywords(const corpus::PaperRecord& paper, const text::DocumentFrequency& df,
                                                 std::size_t k) {
  std::vector<std::string> out;
  for (auto& t : top_terms(paper, df, k)) out.push_back(std::move(t.term));
  return out;
}

// Terms in both papers' top-2k keyword lists, ranked by summed weight.
inline std::vector<std::string> co_occurring_vocabulary(const corpus::PaperRecord& a, const corpus::PaperRecord& b,
                                                        const text::DocumentFrequency& df, std::size_t k) {
  std::map<std::string, double> first;
  for (const auto& t : top_terms(a, df, 2 * k)) first[t.term] = t.score;
  std::vector<ScoredTerm> shared;
  for (const auto& t : top_terms(b, df, 2 * k)) {
    auto it = first.find(t.term);
    if (it != first.end()) shared.push_back(ScoredTerm{t.term, it->second + t.score});
  }
  std::sort(shared.begin(), shared.end(), [](const ScoredTerm& x, const ScoredTerm& y) {
    return x.score != y.score ? x.score > y.score : x.term < y.term;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < shared.size() && i < k; ++i) out.push_back(shared[i].term);
  return out;
}

struct KgNode {
  CorpusId id = 0;
  std::string label;
  std::vector<std::string> keywords;
  std::string issue_resolved;
  std::string issue_finding;
};

struct KgEdge {
  CorpusId from = 0;
  CorpusId to = 0;
  tree::ForestKind kind = tree::ForestKind::inheritance;
  std::string label;
  std::string title;
};

struct KnowledgeGraph {
  tree::ForestKind kind = tree::ForestKind::inheritance;
  tree::TreeParams params;
  std::string topic;
  std::vector<KgNode> nodes;
  std::vector<KgEdge> edges;
};

inline std::string format_chain_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline KnowledgeGraph assemble_kg(const tree::Forest& forest, const corpus::TopicSubset& subset,
                                  const std::vector<insight::InsightBundle>& bundles,
                                  const text::DocumentFrequency& df, const KgOptions& opt = {}) {
  std::map<CorpusId, const insight::InsightBundle*> bundle_of;
  for (const auto& b : bundles) bundle_of[b.paper_id] = &b;

  auto paper = [&](CorpusId id) -> const corpus::PaperRecord& {
    const auto* p = subset.find(id);
    if (!p) fail(ErrorCode::assembly_error, "forest paper " + std::to_string(id) + " is not in the subset");
    return *p;
  };

  KnowledgeGraph kg;
  kg.kind = forest.kind;
  kg.params = forest.params;
  kg.topic = subset.topic_keyword;
  for (const auto& t : forest.trees) {
    for (const auto& n : t.nodes) {
      const auto& p = paper(n.paper_id);
      auto bit = bundle_of.find(n.paper_id);
      if (bit == bundle_of.end())
        fail(ErrorCode::assembly_error, "no insight bundle for paper " + std::to_string(n.paper_id));
      KgNode node;
      node.id = n.paper_id;
      node.label = p.title.empty() ? "Paper " + std::to_string(n.paper_id) : p.title;
      node.keywords = extract_keywords(p, df, opt.keywords);
      node.issue_resolved = text::truncate_with_ellipsis(bit->second->resolved_text, opt.tooltip_chars);
      node.issue_finding = text::truncate_with_ellipsis(bit->second->finding_text, opt.tooltip_chars);
      kg.nodes.push_back(std::move(node));

      if (!n.parent) continue;
      const auto& parent = t.nodes[*n.parent];
      KgEdge e;
      e.kind = forest.kind;
      const auto vocab = co_occurring_vocabulary(paper(parent.paper_id), p, df, opt.vocabulary);
      for (std::size_t i = 0; i < vocab.size(); ++i) e.label += (i ? ", " : "") + vocab[i];
      if (forest.kind == tree::ForestKind::inheritance) {
        // The child was selected because it cites the parent.
        e.from = n.paper_id;
        e.to = parent.paper_id;
        e.title = std::to_string(e.from) + " cites " + std::to_string(e.to);
      } else {
        e.from = parent.paper_id;
        e.to = n.paper_id;
        e.title = format_chain_value(n.score);
      }
      kg.edges.push_back(std::move(e));
    }
  }
  return kg;
}

// Canonical form: sorted keys, nodes by id, edges by (from, to).
inline nlohmann::json to_json(const KnowledgeGraph& kg) {
  auto nodes = kg.nodes;
  std::sort(nodes.begin(), nodes.end(), [](const KgNode& a, const KgNode& b) { return a.id < b.id; });
  auto edges = kg.edges;
  std::sort(edges.begin(), edges.end(),
            [](const KgEdge& a, const KgEdge& b) { return std::tie(a.from, a.to) < std::tie(b.from, b.to); });
  nlohmann::json jn = nlohmann::json::array(), je = nlohmann::json::array();
  for (const auto& n : nodes)
    jn.push_back({{"id", n.id},
                  {"label", n.label},
                  {"title", {{"keywords", n.keywords}, {"issue_resolved", n.issue_resolved},
                             {"issue_finding", n.issue_finding}}}});
  for (const auto& e : edges)
    je.push_back({{"from", e.from}, {"to", e.to}, {"label", e.label}, {"title", e.title}, {"arrows", "to"}});
  return {{"kind", tree::to_string(kg.kind)},
          {"params", {{"N", kg.params.N}, {"M", kg.params.M}, {"T", kg.params.T}, {"topic", kg.topic}}},
          {"nodes", jn},
          {"edges", je}};
}

inline std::string export_kg(const KnowledgeGraph& kg) { return to_json(kg).dump(2) + "\n"; }

}  // namespace ikg::kg
