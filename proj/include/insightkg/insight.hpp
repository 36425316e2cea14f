#pragma once

// Per-paper insight sentences: the Resolved and Finding sentences of each
// paper, concatenated in document order.

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "insightkg/classifier.hpp"
#include "insightkg/corpus.hpp"
#include "insightkg/embedding.hpp"
#include "insightkg/segmenter.hpp"

namespace ikg::insight {

struct SegmentedPaper {
  CorpusId paper_id = 0;
  std::vector<segment::SentenceSpan> sentences;
};

struct InsightBundle {
  CorpusId paper_id = 0;
  std::string resolved_text;
  std::string finding_text;
  std::vector<std::size_t> resolved_sentences;
  std::vector<std::size_t> finding_sentences;

  // Neither a Resolved nor a Finding sentence was found.
  bool flagged() const { return resolved_text.empty() && finding_text.empty(); }

  bool operator==(const InsightBundle&) const = default;
};

// `label_of` is any callable SentenceSpan -> Label.
template <class LabelFn>
std::vector<InsightBundle> extract_insight_bundles(const std::vector<SegmentedPaper>& papers, LabelFn&& label_of) {
  std::vector<InsightBundle> out;
  out.reserve(papers.size());
  for (const auto& paper : papers) {
    InsightBundle b;
    b.paper_id = paper.paper_id;
    for (const auto& s : paper.sentences) {
      const Label l = label_of(s);
      std::string* target = nullptr;
      if (l == Label::resolved) {
        target = &b.resolved_text;
        b.resolved_sentences.push_back(s.index);
      } else if (l == Label::finding) {
        target = &b.finding_text;
        b.finding_sentences.push_back(s.index);
      }
      if (!target) continue;
      if (!target->empty()) target->push_back(' ');
      *target += s.text;
    }
    out.push_back(std::move(b));
  }
  return out;
}

// Embeds every sentence once with `provider`, then classifies with `model`.
inline std::vector<InsightBundle> extract_insight_bundles(const std::vector<SegmentedPaper>& papers,
                                                          const classify::SvmModel& model,
                                                          const embed::Provider& provider) {
  std::vector<std::string> texts;
  for (const auto& p : papers)
    for (const auto& s : p.sentences) texts.push_back(s.text);
  const auto vectors = provider.embed_batch(texts);
  std::vector<Label> labels;
  labels.reserve(vectors.size());
  for (const auto& v : vectors) labels.push_back(model.classify(v));
  std::size_t next = 0;
  return extract_insight_bundles(papers, [&](const segment::SentenceSpan&) { return labels[next++]; });
}

inline nlohmann::json to_json(const InsightBundle& b) {
  return {{"paper_id", b.paper_id},
          {"resolved_text", b.resolved_text},
          {"finding_text", b.finding_text},
          {"resolved_sentences", b.resolved_sentences},
          {"finding_sentences", b.finding_sentences},
          {"flagged", b.flagged()}};
}

inline InsightBundle bundle_from_json(const nlohmann::json& j) {
  InsightBundle b;
  b.paper_id = j.at("paper_id").get<CorpusId>();
  b.resolved_text = j.at("resolved_text").get<std::string>();
  b.finding_text = j.at("finding_text").get<std::string>();
  b.resolved_sentences = j.value("resolved_sentences", std::vector<std::size_t>{});
  b.finding_sentences = j.value("finding_sentences", std::vector<std::size_t>{});
  return b;
}

inline void write_bundles(const std::vector<InsightBundle>& bundles, std::ostream& out) {
  for (const auto& b : bundles) out << to_json(b).dump() << '\n';
}

inline std::vector<InsightBundle> read_bundles(std::istream& in) {
  std::vector<InsightBundle> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    try {
      if (j.is_discarded()) throw std::runtime_error("not JSON");
      out.push_back(bundle_from_json(j));
    } catch (const std::exception& e) {
      fail(ErrorCode::input_error, "bundle line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

inline nlohmann::json to_json(const segment::SentenceSpan& s) {
  return {{"paper_id", s.paper_id}, {"index", s.index}, {"text", s.text}, {"start", s.start}, {"end", s.end}};
}

inline void write_sentences(const std::vector<SegmentedPaper>& papers, std::ostream& out) {
  for (const auto& p : papers) {
    if (p.sentences.empty()) {
      // Keeps papers without insight text visible to later stages.
      out << nlohmann::json({{"paper_id", p.paper_id}, {"index", nullptr}}).dump() << '\n';
      continue;
    }
    for (const auto& s : p.sentences) out << to_json(s).dump() << '\n';
  }
}

inline std::vector<SegmentedPaper> read_sentences(std::istream& in) {
  std::vector<SegmentedPaper> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    try {
      if (j.is_discarded()) throw std::runtime_error("not JSON");
      const auto id = j.at("paper_id").get<CorpusId>();
      if (out.empty() || out.back().paper_id != id) out.push_back(SegmentedPaper{id, {}});
      if (j.at("index").is_null()) continue;
      out.back().sentences.push_back(segment::SentenceSpan{id, j.at("index").get<std::size_t>(),
                                                           j.at("text").get<std::string>(),
                                                           j.at("start").get<std::size_t>(),
                                                           j.at("end").get<std::size_t>()});
    } catch (const std::exception& e) {
      fail(ErrorCode::input_error, "sentence line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace ikg::insight
