#pragma once

#include <array>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "insightkg/error.hpp"
#include "insightkg/text.hpp"

namespace ikg {

// Sentence stance. The numeric order doubles as the tie-break priority
// when classifying: Resolved beats Neutral beats Finding.
enum class Label : int { resolved = 0, neutral = 1, finding = 2 };

inline constexpr std::array<Label, 3> kAllLabels = {Label::resolved, Label::neutral, Label::finding};

constexpr std::size_t index_of(Label l) { return static_cast<std::size_t>(l); }

constexpr std::string_view to_string(Label l) {
  switch (l) {
    case Label::resolved: return "resolved";
    case Label::neutral: return "neutral";
    case Label::finding: return "finding";
  }
  return "?";
}

inline std::optional<Label> parse_label(std::string_view s) {
  const auto lower = text::to_lower(s);
  if (lower == "resolved" || lower == "issue resolved") return Label::resolved;
  if (lower == "neutral") return Label::neutral;
  if (lower == "finding" || lower == "issue finding") return Label::finding;
  return std::nullopt;
}

enum class Split { train, test };

struct LabeledSentence {
  std::string text;
  Label label = Label::neutral;
  Split split = Split::train;
};

// JSON Lines {text, label, split}. Any bad line is an input error that
// names the line, since a silently dropped label skews the class counts.
inline std::vector<LabeledSentence> read_label_file(std::istream& in) {
  std::vector<LabeledSentence> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    auto bad = [&](const std::string& why) {
      fail(ErrorCode::input_error, "label file line " + std::to_string(n) + ": " + why);
    };
    if (j.is_discarded() || !j.is_object()) bad("not a JSON object");
    if (!j.contains("text") || !j["text"].is_string()) bad("missing text");
    if (!j.contains("label") || !j["label"].is_string()) bad("missing label");
    LabeledSentence s;
    s.text = j["text"].get<std::string>();
    if (text::trim(s.text).empty()) bad("empty text");
    auto label = parse_label(j["label"].get<std::string>());
    if (!label) bad("unknown label '" + j["label"].get<std::string>() + "'");
    s.label = *label;
    const auto split = j.value("split", std::string("train"));
    if (split == "train") s.split = Split::train;
    else if (split == "test") s.split = Split::test;
    else bad("unknown split '" + split + "'");
    out.push_back(std::move(s));
  }
  if (in.bad()) fail(ErrorCode::input_error, "unreadable label stream");
  return out;
}

struct LabelCounts {
  std::array<std::size_t, 3> train{};
  std::array<std::size_t, 3> test{};

  std::size_t train_total() const { return train[0] + train[1] + train[2]; }
  std::size_t test_total() const { return test[0] + test[1] + test[2]; }
};

inline LabelCounts count_labels(const std::vector<LabeledSentence>& sentences) {
  LabelCounts c;
  for (const auto& s : sentences) (s.split == Split::train ? c.train : c.test)[index_of(s.label)]++;
  return c;
}

}  // namespace ikg
