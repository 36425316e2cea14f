#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "insightkg/error.hpp"
#include "insightkg/text.hpp"

namespace ikg::embed {

// Unit-norm vector, or a flagged zero vector for texts that carry no
// information. Flagged vectors never take part in similarity.
struct EmbeddingVector {
  std::vector<double> values;
  std::string provider_tag;
  bool zero = true;

  std::size_t dim() const { return values.size(); }

  static EmbeddingVector flagged_zero(std::size_t dim, std::string tag) {
    return EmbeddingVector{std::vector<double>(dim, 0.0), std::move(tag), true};
  }

  static EmbeddingVector normalized(std::vector<double> raw, std::string tag) {
    double sq = 0.0;
    for (double v : raw) {
      if (!std::isfinite(v)) fail(ErrorCode::protocol_error, "embedding component is not finite");
      sq += v * v;
    }
    if (sq == 0.0) return flagged_zero(raw.size(), std::move(tag));
    const double norm = std::sqrt(sq);
    for (double& v : raw) v /= norm;
    return EmbeddingVector{std::move(raw), std::move(tag), false};
  }
};

inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.provider_tag != b.provider_tag)
    fail(ErrorCode::invalid_argument, "cosine across providers: '" + a.provider_tag + "' vs '" + b.provider_tag + "'");
  if (a.dim() != b.dim()) fail(ErrorCode::invalid_argument, "cosine across dimensions");
  if (a.zero || b.zero) fail(ErrorCode::undefined_similarity, "cosine with a flagged zero vector");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) dot += a.values[i] * b.values[i];
  return std::clamp(dot, -1.0, 1.0);
}

enum class ProviderKind { local_hash_tfidf, remote_service };

struct ProviderConfig {
  ProviderKind kind = ProviderKind::local_hash_tfidf;
  std::size_t dim = 1024;
  std::uint64_t seed = 0;          // local only
  std::string endpoint;            // remote only, e.g. http://127.0.0.1:8500
  int timeout_ms = 30000;          // remote only
  std::size_t batch_size = 64;     // remote only: texts per request

  void validate() const {
    if (dim < 8) fail(ErrorCode::invalid_argument, "embedding dim must be >= 8");
    if (kind == ProviderKind::remote_service) {
      if (endpoint.empty()) fail(ErrorCode::invalid_argument, "remote provider needs an endpoint");
      if (timeout_ms <= 0) fail(ErrorCode::invalid_argument, "remote timeout must be positive");
      if (batch_size == 0) fail(ErrorCode::invalid_argument, "remote batch size must be positive");
    }
  }
};

inline nlohmann::json to_json(const ProviderConfig& c) {
  nlohmann::json j = {{"kind", c.kind == ProviderKind::local_hash_tfidf ? "local" : "remote"}, {"dim", c.dim}};
  if (c.kind == ProviderKind::local_hash_tfidf) {
    j["seed"] = c.seed;
  } else {
    j["endpoint"] = c.endpoint;
    j["timeout_ms"] = c.timeout_ms;
    j["batch_size"] = c.batch_size;
  }
  return j;
}

inline ProviderConfig provider_config_from_json(const nlohmann::json& j) {
  ProviderConfig c;
  try {
    const auto kind = j.value("kind", std::string("local"));
    if (kind == "local") c.kind = ProviderKind::local_hash_tfidf;
    else if (kind == "remote") c.kind = ProviderKind::remote_service;
    else fail(ErrorCode::config_error, "unknown embedding provider kind '" + kind + "'");
    c.dim = j.value("dim", c.dim);
    c.seed = j.value("seed", c.seed);
    c.endpoint = j.value("endpoint", c.endpoint);
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    c.batch_size = j.value("batch_size", c.batch_size);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config_error, std::string("embedding config: ") + e.what());
  }
  c.validate();
  return c;
}

class Provider {
 public:
  virtual ~Provider() = default;
  virtual const std::string& tag() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const = 0;

  EmbeddingVector embed(const std::string& text) const {
    return embed_batch(std::span<const std::string>(&text, 1)).front();
  }
};

// Signed feature hashing of TF-IDF weights against a fixed document
// frequency table. Pure: the same text always maps to the same vector.
class LocalHashProvider final : public Provider {
 public:
  LocalHashProvider(const ProviderConfig& cfg, text::DocumentFrequency df)
      : dim_(cfg.dim), seed_(cfg.seed), df_(std::move(df)) {
    cfg.validate();
    salt_ = text::fnv1a("seed:" + std::to_string(seed_));
    tag_ = "local-tfidf/dim=" + std::to_string(dim_) + "/seed=" + std::to_string(seed_) +
           "/df=" + text::hex64(df_.fingerprint());
  }

  const std::string& tag() const override { return tag_; }
  std::size_t dim() const override { return dim_; }
  const text::DocumentFrequency& document_frequency() const { return df_; }

  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
  }

  std::size_t bucket(const std::string& token) const { return text::fnv1a(token, salt_) % dim_; }
  double sign(const std::string& token) const {
    return (text::fnv1a(token, salt_ ^ 0x9e3779b97f4a7c15ULL) >> 63) ? -1.0 : 1.0;
  }

 private:
  EmbeddingVector embed_one(const std::string& t) const {
    std::map<std::string, double> tf;
    for (auto& tok : text::content_tokens(t)) tf[tok] += 1.0;
    if (tf.empty()) return EmbeddingVector::flagged_zero(dim_, tag_);
    std::vector<double> raw(dim_, 0.0);
    for (const auto& [tok, count] : tf) raw[bucket(tok)] += sign(tok) * count * df_.idf(tok);
    return EmbeddingVector::normalized(std::move(raw), tag_);
  }

  std::size_t dim_;
  std::uint64_t seed_;
  std::uint64_t salt_ = 0;
  text::DocumentFrequency df_;
  std::string tag_;
};

}  // namespace ikg::embed
