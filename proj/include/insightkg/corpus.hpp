#pragma once

// Corpus ingestion: JSON Lines papers with offset annotations, topic
// filtering, insight-section extraction and the subset citation graph.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "insightkg/error.hpp"
#include "insightkg/text.hpp"

namespace ikg {

using CorpusId = std::int64_t;

namespace corpus {

// Half-open [start, end) in Unicode code points of the body text.
struct Span {
  std::int64_t start = 0;
  std::int64_t end = 0;
};

struct BibEntry {
  std::string key;
  std::optional<CorpusId> cited;
};

struct Section {
  std::string header;
  std::vector<std::string> paragraphs;
  bool insight = false;
};

struct PaperRecord {
  CorpusId corpus_id = 0;
  std::string title;
  std::string body;
  std::vector<Span> header_spans;
  std::vector<Span> paragraph_spans;
  std::vector<BibEntry> bibentries;
  std::optional<int> year;
  std::optional<std::string> venue;

  // Derived at parse time.
  std::vector<Section> sections;
  std::string insight_text;
  std::map<std::string, CorpusId> bib_links;
  std::size_t skipped_annotations = 0;
};

struct CitationEdge {
  CorpusId citing = 0;
  CorpusId cited = 0;
  auto operator<=>(const CitationEdge&) const = default;
};

struct TopicSubset {
  std::string topic_keyword;
  std::vector<PaperRecord> papers;  // corpus_id ascending
  std::set<CitationEdge> citation_edges;
  std::size_t dropped_citation_count = 0;
  std::size_t scanned_documents = 0;
  std::size_t malformed_documents = 0;
  std::size_t duplicate_documents = 0;

  const PaperRecord* find(CorpusId id) const {
    auto it = std::lower_bound(papers.begin(), papers.end(), id,
                               [](const PaperRecord& p, CorpusId v) { return p.corpus_id < v; });
    return (it != papers.end() && it->corpus_id == id) ? &*it : nullptr;
  }

  std::vector<CorpusId> ids() const {
    std::vector<CorpusId> out;
    out.reserve(papers.size());
    for (const auto& p : papers) out.push_back(p.corpus_id);
    return out;
  }
};

inline constexpr std::string_view kInsightHeaderStems[] = {"conclusion", "discuss", "limitation"};

inline bool is_insight_header(std::string_view header) {
  const std::string lower = text::to_lower(header);
  for (auto stem : kInsightHeaderStems)
    if (lower.find(stem) != std::string::npos) return true;
  return false;
}

struct InsightExtraction {
  std::vector<Section> sections;
  std::string insight_text;
  std::size_t skipped_annotations = 0;
};

// Paragraphs belong to the nearest preceding header (by start offset);
// paragraphs ahead of every header form an unnamed leading section.
inline InsightExtraction extract_insight_sections(std::string_view body,
                                                  const std::vector<Span>& header_spans,
                                                  const std::vector<Span>& paragraph_spans) {
  InsightExtraction out;
  const auto offsets = text::codepoint_byte_offsets(body);
  const auto limit = static_cast<std::int64_t>(offsets.size() - 1);

  auto valid = [&](const Span& s) { return s.start >= 0 && s.start < s.end && s.end <= limit; };
  auto slice = [&](const Span& s) {
    const auto b = offsets[static_cast<std::size_t>(s.start)];
    const auto e = offsets[static_cast<std::size_t>(s.end)];
    return std::string(body.substr(b, e - b));
  };

  std::vector<Span> headers, paragraphs;
  for (const auto& s : header_spans) {
    if (valid(s)) headers.push_back(s);
    else ++out.skipped_annotations;
  }
  for (const auto& s : paragraph_spans) {
    if (valid(s)) paragraphs.push_back(s);
    else ++out.skipped_annotations;
  }
  auto by_start = [](const Span& a, const Span& b) {
    return a.start != b.start ? a.start < b.start : a.end < b.end;
  };
  std::stable_sort(headers.begin(), headers.end(), by_start);
  std::stable_sort(paragraphs.begin(), paragraphs.end(), by_start);

  bool has_leading = !paragraphs.empty() && (headers.empty() || paragraphs.front().start < headers.front().start);
  if (has_leading) out.sections.push_back(Section{});
  for (const auto& h : headers) {
    Section sec;
    sec.header = slice(h);
    sec.insight = is_insight_header(sec.header);
    out.sections.push_back(std::move(sec));
  }

  std::size_t h = 0;  // number of headers starting at or before the paragraph
  for (const auto& p : paragraphs) {
    while (h < headers.size() && headers[h].start <= p.start) ++h;
    const std::size_t section = has_leading ? h : h - 1;
    out.sections[section].paragraphs.push_back(slice(p));
  }

  bool first = true;
  for (const auto& sec : out.sections) {
    if (!sec.insight) continue;
    for (const auto& para : sec.paragraphs) {
      if (!first) out.insight_text.push_back('\n');
      out.insight_text += para;
      first = false;
    }
  }
  return out;
}

namespace detail {

// S2ORC ships annotation arrays JSON-encoded inside strings; accept both.
inline nlohmann::json annotation_array(const nlohmann::json& annotations, const char* name) {
  if (!annotations.is_object() || !annotations.contains(name)) return nlohmann::json::array();
  const auto& v = annotations.at(name);
  if (v.is_null()) return nlohmann::json::array();
  if (v.is_string()) return nlohmann::json::parse(v.get<std::string>());
  if (!v.is_array()) throw nlohmann::json::type_error::create(302, std::string(name) + " must be an array", &v);
  return v;
}

inline std::vector<Span> spans(const nlohmann::json& arr) {
  std::vector<Span> out;
  for (const auto& s : arr) out.push_back(Span{s.at("start").get<std::int64_t>(), s.at("end").get<std::int64_t>()});
  return out;
}

}  // namespace detail

inline PaperRecord parse_document(const nlohmann::json& doc) {
  if (!doc.is_object()) fail(ErrorCode::input_error, "document is not a JSON object");
  if (!doc.contains("text") || !doc.at("text").is_string())
    fail(ErrorCode::input_error, "document has no body text");
  PaperRecord rec;
  try {
    rec.corpus_id = doc.at("corpusid").get<CorpusId>();
    if (doc.contains("title") && !doc.at("title").is_null()) rec.title = doc.at("title").get<std::string>();
    rec.body = doc.at("text").get<std::string>();
    const nlohmann::json empty = nlohmann::json::object();
    const auto& ann = doc.contains("annotations") ? doc.at("annotations") : empty;
    rec.header_spans = detail::spans(detail::annotation_array(ann, "section_headers"));
    rec.paragraph_spans = detail::spans(detail::annotation_array(ann, "paragraphs"));
    for (const auto& b : detail::annotation_array(ann, "bibentry")) {
      BibEntry e;
      e.key = b.at("key").get<std::string>();
      if (b.contains("cited_corpusid") && !b.at("cited_corpusid").is_null())
        e.cited = b.at("cited_corpusid").get<CorpusId>();
      rec.bibentries.push_back(std::move(e));
    }
    if (doc.contains("year") && doc.at("year").is_number_integer()) rec.year = doc.at("year").get<int>();
    if (doc.contains("venue") && doc.at("venue").is_string()) rec.venue = doc.at("venue").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::input_error, std::string("malformed document: ") + e.what());
  }

  auto extraction = extract_insight_sections(rec.body, rec.header_spans, rec.paragraph_spans);
  rec.sections = std::move(extraction.sections);
  rec.insight_text = std::move(extraction.insight_text);
  rec.skipped_annotations = extraction.skipped_annotations;
  for (const auto& b : rec.bibentries)
    if (b.cited) rec.bib_links.emplace(b.key, *b.cited);
  return rec;
}

inline nlohmann::json to_json(const PaperRecord& rec) {
  auto span_array = [](const std::vector<Span>& spans) {
    auto arr = nlohmann::json::array();
    for (const auto& s : spans) arr.push_back({{"start", s.start}, {"end", s.end}});
    return arr;
  };
  auto bib = nlohmann::json::array();
  for (const auto& b : rec.bibentries)
    bib.push_back({{"key", b.key}, {"cited_corpusid", b.cited ? nlohmann::json(*b.cited) : nlohmann::json()}});
  nlohmann::json doc = {
      {"corpusid", rec.corpus_id},
      {"title", rec.title},
      {"text", rec.body},
      {"annotations",
       {{"section_headers", span_array(rec.header_spans)},
        {"paragraphs", span_array(rec.paragraph_spans)},
        {"bibentry", bib}}}};
  if (rec.year) doc["year"] = *rec.year;
  if (rec.venue) doc["venue"] = *rec.venue;
  return doc;
}

// Edges A->B for every bib link of A that resolves to B inside the subset.
// Links leaving the subset are counted; self-citations are discarded.
inline void build_citation_graph(TopicSubset& subset) {
  subset.citation_edges.clear();
  subset.dropped_citation_count = 0;
  for (const auto& paper : subset.papers) {
    for (const auto& [key, cited] : paper.bib_links) {
      if (cited == paper.corpus_id) continue;
      if (subset.find(cited) == nullptr) {
        ++subset.dropped_citation_count;
        continue;
      }
      subset.citation_edges.insert(CitationEdge{paper.corpus_id, cited});
    }
  }
}

inline void normalize_order(TopicSubset& subset) {
  std::stable_sort(subset.papers.begin(), subset.papers.end(),
                   [](const PaperRecord& a, const PaperRecord& b) { return a.corpus_id < b.corpus_id; });
  auto last = std::unique(subset.papers.begin(), subset.papers.end(),
                          [](const PaperRecord& a, const PaperRecord& b) { return a.corpus_id == b.corpus_id; });
  subset.duplicate_documents += static_cast<std::size_t>(std::distance(last, subset.papers.end()));
  subset.papers.erase(last, subset.papers.end());
}

// Streams one JSON document per line. Malformed lines are counted and
// skipped; a stream read failure aborts with the document index.
inline TopicSubset filter_by_topic(std::istream& corpus, const std::string& keyword) {
  if (text::trim(keyword).empty()) fail(ErrorCode::invalid_argument, "topic keyword must be non-empty");
  TopicSubset subset;
  subset.topic_keyword = keyword;
  std::string line;
  std::size_t index = 0;
  while (true) {
    if (!std::getline(corpus, line)) {
      if (corpus.bad()) fail(ErrorCode::input_error, "unreadable corpus stream at document " + std::to_string(index));
      break;
    }
    if (text::trim(line).empty()) continue;
    ++index;
    ++subset.scanned_documents;
    auto doc = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object()) {
      ++subset.malformed_documents;
      continue;
    }
    const auto* title = doc.contains("title") && doc["title"].is_string() ? doc["title"].get_ptr<const std::string*>() : nullptr;
    const auto* body = doc.contains("text") && doc["text"].is_string() ? doc["text"].get_ptr<const std::string*>() : nullptr;
    const bool match = (title && text::contains_ci(*title, keyword)) || (body && text::contains_ci(*body, keyword));
    if (!match) continue;
    try {
      subset.papers.push_back(parse_document(doc));
    } catch (const Error&) {
      ++subset.malformed_documents;
    }
  }
  normalize_order(subset);
  build_citation_graph(subset);
  return subset;
}

// Reads an already-filtered subset file back without keyword filtering.
inline TopicSubset read_subset(std::istream& in, const std::string& keyword) {
  TopicSubset subset;
  subset.topic_keyword = keyword;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    ++index;
    auto doc = nlohmann::json::parse(line, nullptr, false);
    if (doc.is_discarded()) fail(ErrorCode::input_error, "malformed subset document " + std::to_string(index));
    subset.papers.push_back(parse_document(doc));
  }
  if (in.bad()) fail(ErrorCode::input_error, "unreadable subset stream at document " + std::to_string(index));
  subset.scanned_documents = index;
  normalize_order(subset);
  build_citation_graph(subset);
  return subset;
}

inline void write_subset(const TopicSubset& subset, std::ostream& out) {
  for (const auto& p : subset.papers) out << to_json(p).dump() << '\n';
}

inline void write_edges(const TopicSubset& subset, std::ostream& out) {
  for (const auto& e : subset.citation_edges) out << e.citing << ',' << e.cited << '\n';
}

// Text used for document-frequency statistics and keyword extraction.
inline std::string profile_text(const PaperRecord& p) { return p.title + "\n" + p.insight_text; }

}  // namespace corpus
}  // namespace ikg
