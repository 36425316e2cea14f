#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path data_dir() { return INSIGHTKG_TEST_DATA; }
inline fs::path source_dir() { return INSIGHTKG_SOURCE_DIR; }

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

// Removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("insightkg-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// Corpus document with offsets computed the way the corpus stores them
// (code points). Text here is ASCII unless the caller passes UTF-8.
struct DocBuilder {
  long long id = 0;
  std::string title;
  std::string text;
  std::size_t cps = 0;
  nlohmann::json headers = nlohmann::json::array();
  nlohmann::json paragraphs = nlohmann::json::array();
  nlohmann::json bib = nlohmann::json::array();

  static std::size_t cp(const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
  }
  void append(const std::string& s) {
    text += s;
    cps += cp(s);
  }
  DocBuilder& header(const std::string& h) {
    const auto start = cps;
    append(h);
    headers.push_back({{"start", start}, {"end", cps}});
    append("\n");
    return *this;
  }
  DocBuilder& para(const std::string& p) {
    const auto start = cps;
    append(p);
    paragraphs.push_back({{"start", start}, {"end", cps}});
    append("\n");
    return *this;
  }
  DocBuilder& cites(long long other) {
    bib.push_back({{"key", "b" + std::to_string(bib.size())}, {"cited_corpusid", other}});
    return *this;
  }
  nlohmann::json json() const {
    return {{"corpusid", id},
            {"title", title},
            {"text", text},
            {"annotations", {{"section_headers", headers}, {"paragraphs", paragraphs}, {"bibentry", bib}}}};
  }
};

inline std::string jsonl(const std::vector<nlohmann::json>& docs) {
  std::string out;
  for (const auto& d : docs) out += d.dump() + "\n";
  return out;
}

// Validates the subset of JSON Schema used by schemas/kg.schema.json:
// type, required, properties, additionalProperties (bool), items, enum,
// const, minimum, minItems, pattern-free strings, $ref to #/$defs/...
class SchemaValidator {
 public:
  explicit SchemaValidator(nlohmann::json schema) : root_(std::move(schema)) {}

  std::vector<std::string> validate(const nlohmann::json& doc) const {
    std::vector<std::string> errors;
    check(root_, doc, "$", errors);
    return errors;
  }

 private:
  const nlohmann::json& resolve(const nlohmann::json& s) const {
    if (!s.contains("$ref")) return s;
    const auto ref = s.at("$ref").get<std::string>();
    const std::string prefix = "#/$defs/";
    if (ref.rfind(prefix, 0) != 0) throw std::runtime_error("unsupported $ref " + ref);
    return root_.at("$defs").at(ref.substr(prefix.size()));
  }

  static bool has_type(const nlohmann::json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "integer") return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
    if (t == "number") return v.is_number();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    throw std::runtime_error("unsupported type " + t);
  }

  void check(const nlohmann::json& schema_in, const nlohmann::json& v, const std::string& at,
             std::vector<std::string>& errors) const {
    const auto& s = resolve(schema_in);
    if (s.contains("type")) {
      bool ok = false;
      if (s["type"].is_array()) {
        for (const auto& t : s["type"]) ok = ok || has_type(v, t.get<std::string>());
      } else {
        ok = has_type(v, s["type"].get<std::string>());
      }
      if (!ok) {
        errors.push_back(at + ": expected type " + s["type"].dump());
        return;
      }
    }
    if (s.contains("const") && v != s["const"]) errors.push_back(at + ": expected " + s["const"].dump());
    if (s.contains("enum")) {
      bool found = false;
      for (const auto& e : s["enum"]) found = found || e == v;
      if (!found) errors.push_back(at + ": not in enum");
    }
    if (s.contains("minimum") && v.is_number() && v.get<double>() < s["minimum"].get<double>())
      errors.push_back(at + ": below minimum");
    if (v.is_object()) {
      if (s.contains("required"))
        for (const auto& r : s["required"])
          if (!v.contains(r.get<std::string>())) errors.push_back(at + ": missing " + r.get<std::string>());
      const auto props = s.value("properties", nlohmann::json::object());
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (props.contains(it.key())) check(props[it.key()], it.value(), at + "." + it.key(), errors);
        else if (s.contains("additionalProperties") && s["additionalProperties"] == false)
          errors.push_back(at + ": unexpected property " + it.key());
      }
    }
    if (v.is_array()) {
      if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>())
        errors.push_back(at + ": too few items");
      if (s.contains("items"))
        for (std::size_t i = 0; i < v.size(); ++i) check(s["items"], v[i], at + "[" + std::to_string(i) + "]", errors);
    }
  }

  nlohmann::json root_;
};

}  // namespace testsupport
