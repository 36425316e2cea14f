#pragma once

// Directed chain scores between papers: scores[i][j] is the cosine between
// the Finding text of paper i and the Resolved text of paper j.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "insightkg/corpus.hpp"
#include "insightkg/embedding.hpp"
#include "insightkg/error.hpp"
#include "insightkg/insight.hpp"

namespace ikg::relevance {

class RelevanceMatrix {
 public:
  RelevanceMatrix() = default;
  explicit RelevanceMatrix(std::vector<CorpusId> ids)
      : ids_(std::move(ids)), scores_(ids_.size() * ids_.size(), 0.0), valid_(ids_.size() * ids_.size(), 0) {}

  std::size_t size() const { return ids_.size(); }
  const std::vector<CorpusId>& paper_ids() const { return ids_; }
  CorpusId id(std::size_t i) const { return ids_[i]; }

  std::optional<std::size_t> index_of(CorpusId id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - ids_.begin());
  }

  bool valid(std::size_t i, std::size_t j) const { return valid_[i * size() + j] != 0; }
  double score(std::size_t i, std::size_t j) const { return scores_[i * size() + j]; }

  void set(std::size_t i, std::size_t j, double value) {
    if (i == j) fail(ErrorCode::invalid_argument, "relevance diagonal is always invalid");
    scores_[i * size() + j] = value;
    valid_[i * size() + j] = 1;
  }

  std::size_t masked_count() const {
    return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), 0));
  }

  bool fully_masked() const { return masked_count() == valid_.size(); }

  // Same structure with every valid entry multiplied by `factor`.
  RelevanceMatrix scaled(double factor) const {
    RelevanceMatrix m = *this;
    for (auto& s : m.scores_) s *= factor;
    return m;
  }

  bool operator==(const RelevanceMatrix&) const = default;

 private:
  std::vector<CorpusId> ids_;  // ascending
  std::vector<double> scores_;
  std::vector<char> valid_;
};

// Embeds each paper's Finding and Resolved text once. Entries whose source
// Finding or target Resolved text carries no information stay masked.
inline RelevanceMatrix build_relevance_matrix(std::vector<insight::InsightBundle> bundles,
                                              const embed::Provider& provider) {
  if (bundles.size() < 2) fail(ErrorCode::invalid_argument, "relevance matrix needs at least two papers");
  std::sort(bundles.begin(), bundles.end(), [](const auto& a, const auto& b) { return a.paper_id < b.paper_id; });
  for (std::size_t i = 1; i < bundles.size(); ++i)
    if (bundles[i].paper_id == bundles[i - 1].paper_id)
      fail(ErrorCode::invalid_argument, "duplicate bundle for paper " + std::to_string(bundles[i].paper_id));
  if (std::all_of(bundles.begin(), bundles.end(), [](const auto& b) { return b.flagged(); }))
    fail(ErrorCode::empty_matrix, "every bundle is empty; no relevance chain can exist");

  std::vector<std::string> texts;
  std::vector<CorpusId> ids;
  for (const auto& b : bundles) {
    ids.push_back(b.paper_id);
    texts.push_back(b.finding_text);
    texts.push_back(b.resolved_text);
  }
  const auto vectors = provider.embed_batch(texts);

  RelevanceMatrix m(std::move(ids));
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& finding = vectors[2 * i];
    if (finding.zero) continue;
    for (std::size_t j = 0; j < m.size(); ++j) {
      const auto& resolved = vectors[2 * j + 1];
      if (i == j || resolved.zero) continue;
      m.set(i, j, embed::cosine(finding, resolved));
    }
  }
  return m;
}

enum class ChainAverage { outgoing, incoming, both };

inline ChainAverage parse_chain_average(const std::string& s) {
  if (s == "outgoing") return ChainAverage::outgoing;
  if (s == "incoming") return ChainAverage::incoming;
  if (s == "both") return ChainAverage::both;
  fail(ErrorCode::invalid_argument, "chain average must be outgoing, incoming or both");
}

// Mean of the paper's valid entries: its row (outgoing chains), its column
// (incoming), or both pooled. nullopt when there are none.
inline std::optional<double> average_chain_score(const RelevanceMatrix& m, CorpusId paper,
                                                 ChainAverage mode = ChainAverage::outgoing) {
  const auto i = m.index_of(paper);
  if (!i) fail(ErrorCode::invalid_argument, "paper " + std::to_string(paper) + " is not in the relevance matrix");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (mode != ChainAverage::incoming && m.valid(*i, j)) sum += m.score(*i, j), ++n;
    if (mode != ChainAverage::outgoing && m.valid(j, *i)) sum += m.score(j, *i), ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

// {paper_ids, scores, mask}: mask[i][j] is true where the entry is
// undefined; undefined scores are written as null.
inline nlohmann::json to_json(const RelevanceMatrix& m) {
  nlohmann::json scores = nlohmann::json::array(), mask = nlohmann::json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    nlohmann::json srow = nlohmann::json::array(), mrow = nlohmann::json::array();
    for (std::size_t j = 0; j < m.size(); ++j) {
      srow.push_back(m.valid(i, j) ? nlohmann::json(m.score(i, j)) : nlohmann::json());
      mrow.push_back(!m.valid(i, j));
    }
    scores.push_back(std::move(srow));
    mask.push_back(std::move(mrow));
  }
  return {{"paper_ids", m.paper_ids()}, {"scores", scores}, {"mask", mask}};
}

inline RelevanceMatrix matrix_from_json(const nlohmann::json& j) {
  try {
    auto ids = j.at("paper_ids").get<std::vector<CorpusId>>();
    if (!std::is_sorted(ids.begin(), ids.end())) fail(ErrorCode::input_error, "matrix paper_ids must be ascending");
    RelevanceMatrix m(ids);
    const auto& scores = j.at("scores");
    const auto& mask = j.at("mask");
    if (scores.size() != ids.size() || mask.size() != ids.size()) fail(ErrorCode::input_error, "matrix shape mismatch");
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (scores[i].size() != ids.size() || mask[i].size() != ids.size())
        fail(ErrorCode::input_error, "matrix row shape mismatch");
      for (std::size_t k = 0; k < ids.size(); ++k)
        if (!mask[i][k].get<bool>() && i != k) m.set(i, k, scores[i][k].get<double>());
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::input_error, std::string("malformed matrix file: ") + e.what());
  }
}

}  // namespace ikg::relevance
