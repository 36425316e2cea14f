#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "insightkg/corpus.hpp"
#include "insightkg/error.hpp"
#include "insightkg/text.hpp"

namespace ikg::segment {

struct SentenceSpan {
  CorpusId paper_id = 0;
  std::size_t index = 0;
  std::string text;
  // Byte range into the segmented text; text == input.substr(start, end - start).
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const SentenceSpan&) const = default;
};

// Manual corrections, keyed by the byte position where a sentence starts.
struct Overrides {
  std::set<std::size_t> split;  // force a sentence to start here
  std::set<std::size_t> join;   // suppress the boundary whose next sentence starts here
};

using OverrideTable = std::map<CorpusId, Overrides>;

inline OverrideTable read_overrides(std::istream& in) {
  OverrideTable table;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    try {
      if (j.is_discarded()) throw std::runtime_error("not JSON");
      const auto id = j.at("paper_id").get<CorpusId>();
      const auto pos = j.at("position").get<std::size_t>();
      const auto action = j.at("action").get<std::string>();
      if (action == "split") table[id].split.insert(pos);
      else if (action == "join") table[id].join.insert(pos);
      else throw std::runtime_error("action must be split or join");
    } catch (const std::exception& e) {
      fail(ErrorCode::input_error, "override line " + std::to_string(n) + ": " + e.what());
    }
  }
  return table;
}

inline const std::vector<std::string>& default_abbreviations() {
  static const std::vector<std::string> list = {
      "et al.", "e.g.", "i.e.", "cf.", "Fig.", "Figs.", "Eq.", "Eqs.", "Tab.", "vs.",
      "Sec.", "Ref.", "Refs.", "No.", "approx.", "resp.", "Dr.", "Prof.", "Mr.", "Ms."};
  return list;
}

// One abbreviation per line; blank lines and lines starting with '#' ignored.
inline std::vector<std::string> read_abbreviations(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.emplace_back(t);
  }
  return out;
}

class Segmenter {
 public:
  Segmenter() : Segmenter(default_abbreviations()) {}

  explicit Segmenter(std::vector<std::string> abbreviations) {
    for (auto& a : abbreviations) abbreviations_.push_back(text::to_lower(a));
  }

  std::vector<SentenceSpan> segment(std::string_view input, CorpusId paper_id = 0,
                                    const Overrides* overrides = nullptr) const {
    std::set<std::size_t> starts = boundaries(input);
    if (overrides) {
      for (auto p : overrides->join) starts.erase(p);
      for (auto p : overrides->split)
        if (p > 0 && p < input.size()) starts.insert(p);
    }
    starts.insert(0);

    std::vector<SentenceSpan> spans;
    auto it = starts.begin();
    while (it != starts.end()) {
      const std::size_t seg_begin = *it;
      const std::size_t seg_end = (++it == starts.end()) ? input.size() : *it;
      std::size_t b = seg_begin, e = seg_end;
      while (b < e && text::is_space(input[b])) ++b;
      while (e > b && text::is_space(input[e - 1])) --e;
      if (b == e) continue;
      spans.push_back(SentenceSpan{paper_id, spans.size(), std::string(input.substr(b, e - b)), b, e});
    }
    return spans;
  }

 private:
  static bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }
  static bool is_closer(char c) { return c == ')' || c == ']' || c == '"' || c == '\''; }
  static bool opens_sentence(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '(' || c == '[' || c == '{' ||
           c == '"' || static_cast<unsigned char>(c) >= 0x80;
  }

  // True when the period at `dot` closes a protected abbreviation or an initial.
  bool protected_period(std::string_view s, std::size_t dot, std::string_view next_word) const {
    const std::string_view upto = s.substr(0, dot + 1);
    for (const auto& a : abbreviations_) {
      if (a.size() > upto.size()) continue;
      const auto tail = upto.substr(upto.size() - a.size());
      if (text::to_lower(tail) != a) continue;
      const std::size_t before = upto.size() - a.size();
      if (before == 0 || text::is_space(s[before - 1]) || s[before - 1] == '(' || s[before - 1] == '[')
        return true;
    }
    // Single capital initial such as "J." in "J. Smith", unless a function
    // word follows ("We built X. It works.").
    if (dot >= 1 && s[dot - 1] >= 'A' && s[dot - 1] <= 'Z') {
      const char prev = dot == 1 ? ' ' : s[dot - 2];
      if (!(text::is_space(prev) || prev == '(' || prev == '.')) return false;
      return !text::is_stopword(text::to_lower(next_word));
    }
    return false;
  }

  // Byte positions where a new sentence starts (excluding 0).
  std::set<std::size_t> boundaries(std::string_view s) const {
    std::set<std::size_t> starts;
    std::size_t i = 0;
    while (i < s.size()) {
      if (!is_terminal(s[i])) {
        ++i;
        continue;
      }
      std::size_t last_terminal = i;
      std::size_t j = i + 1;
      while (j < s.size() && is_terminal(s[j])) last_terminal = j++;
      while (j < s.size() && is_closer(s[j])) ++j;
      if (j >= s.size() || !text::is_space(s[j])) {
        i = j;
        continue;
      }
      std::size_t k = j;
      while (k < s.size() && text::is_space(s[k])) ++k;
      const bool single_period = last_terminal == i && s[i] == '.';
      std::size_t w = k;
      while (w < s.size() && std::isalpha(static_cast<unsigned char>(s[w]))) ++w;
      if (k < s.size() && opens_sentence(s[k]) && !(single_period && protected_period(s, i, s.substr(k, w - k))))
        starts.insert(k);
      i = k;
    }
    return starts;
  }

  std::vector<std::string> abbreviations_;
};

}  // namespace ikg::segment
