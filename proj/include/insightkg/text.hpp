#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace ikg::text {

// 64-bit FNV-1a. Used for feature hashing and config fingerprints, so the
// value must never depend on the platform's std::hash.
inline std::uint64_t fnv1a(std::string_view bytes,
                           std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return out;
}

inline char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = ascii_lower(c);
  return out;
}

inline bool contains_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  if (needle.size() > haystack.size()) return false;
  const std::string h = to_lower(haystack);
  const std::string n = to_lower(needle);
  return h.find(n) != std::string::npos;
}

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

// ASCII letters/digits plus any non-ASCII byte (so UTF-8 words stay whole).
inline bool is_token_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') ||
         u >= 0x80;
}

// Lowercased alphanumeric runs. A single hyphen between two runs is kept,
// so "multi-hop" is one term.
inline std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string cur;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (is_token_char(c)) {
      cur.push_back(ascii_lower(c));
    } else if (c == '-' && !cur.empty() && i + 1 < s.size() && is_token_char(s[i + 1])) {
      cur.push_back('-');
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

inline const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> words = {
      "a", "about", "above", "after", "again", "against", "all", "also", "am", "an",
      "and", "any", "are", "as", "at", "be", "because", "been", "before", "being",
      "below", "between", "both", "but", "by", "can", "could", "did", "do", "does",
      "doing", "down", "during", "each", "et", "al", "etc", "few", "for", "from",
      "further", "had", "has", "have", "having", "he", "her", "here", "hers",
      "herself", "him", "himself", "his", "how", "however", "i", "if", "in", "into",
      "is", "it", "its", "itself", "just", "may", "me", "might", "more", "most",
      "must", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once",
      "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "same",
      "she", "should", "so", "some", "such", "than", "that", "the", "their",
      "theirs", "them", "themselves", "then", "there", "these", "they", "this",
      "those", "through", "thus", "to", "too", "under", "until", "up", "us", "very",
      "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom",
      "why", "will", "with", "would", "you", "your", "yours", "yourself",
      "yourselves", "e", "g", "ie", "eg", "via", "within", "without"};
  return words;
}

inline bool is_stopword(std::string_view token) {
  return stopwords().count(std::string(token)) != 0;
}

inline std::vector<std::string> content_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (auto& t : tokenize(s))
    if (!is_stopword(t)) out.push_back(std::move(t));
  return out;
}

// Document-frequency table over a fixed document collection. Built from a
// multiset of texts, so insertion order never matters.
class DocumentFrequency {
 public:
  DocumentFrequency() = default;

  explicit DocumentFrequency(std::span<const std::string> documents) {
    for (const auto& doc : documents) add(doc);
  }

  void add(std::string_view document) {
    ++num_documents_;
    std::set<std::string> seen;
    for (auto& t : content_tokens(document)) seen.insert(std::move(t));
    for (const auto& t : seen) ++df_[t];
  }

  std::size_t num_documents() const { return num_documents_; }

  std::size_t df(const std::string& term) const {
    auto it = df_.find(term);
    return it == df_.end() ? 0 : it->second;
  }

  // Smoothed inverse document frequency: ln((1 + N) / (1 + df)) + 1.
  double idf(const std::string& term) const {
    const double n = static_cast<double>(num_documents_);
    return std::log((1.0 + n) / (1.0 + static_cast<double>(df(term)))) + 1.0;
  }

  const std::map<std::string, std::size_t>& table() const { return df_; }

  std::uint64_t fingerprint() const {
    std::uint64_t h = fnv1a("df:" + std::to_string(num_documents_));
    for (const auto& [term, count] : df_) {
      h = fnv1a(term, h);
      h = fnv1a("\x1f" + std::to_string(count) + "\x1e", h);
    }
    return h;
  }

 private:
  std::size_t num_documents_ = 0;
  std::map<std::string, std::size_t> df_;
};

// --- UTF-8 helpers -------------------------------------------------------

inline bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

inline std::size_t codepoint_count(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if (!is_continuation(c)) ++n;
  return n;
}

// byte_offsets[k] is the byte index of code point k; the final entry is
// s.size(), so code point offsets in [0, count] all map.
inline std::vector<std::size_t> codepoint_byte_offsets(std::string_view s) {
  std::vector<std::size_t> offsets;
  offsets.reserve(s.size() + 1);
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!is_continuation(static_cast<unsigned char>(s[i]))) offsets.push_back(i);
  offsets.push_back(s.size());
  return offsets;
}

// Cuts to at most max_codepoints, replacing the tail with an ellipsis.
inline std::string truncate_with_ellipsis(std::string_view s, std::size_t max_codepoints) {
  if (codepoint_count(s) <= max_codepoints) return std::string(s);
  if (max_codepoints == 0) return {};
  const auto offsets = codepoint_byte_offsets(s);
  return std::string(s.substr(0, offsets[max_codepoints - 1])) + "\xE2\x80\xA6";
}

}  // namespace ikg::text
