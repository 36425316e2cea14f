#pragma once

// Remote embedding provider. Wire protocol:
//   POST {endpoint}/embed   {"texts": [string, ...]}
//   200 -> {"dim": int, "vectors": [[float, ...], ...]}  (request order)

#include <memory>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "insightkg/embedding.hpp"

namespace ikg::embed {

class RemoteProvider final : public Provider {
 public:
  explicit RemoteProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const auto scheme = cfg_.endpoint.find("://");
    const auto path_at = cfg_.endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    base_ = cfg_.endpoint.substr(0, path_at);
    path_ = (path_at == std::string::npos ? std::string() : cfg_.endpoint.substr(path_at));
    while (!path_.empty() && path_.back() == '/') path_.pop_back();
    path_ += "/embed";
    tag_ = "remote/" + cfg_.endpoint + "/dim=" + std::to_string(cfg_.dim);
  }

  const std::string& tag() const override { return tag_; }
  std::size_t dim() const override { return cfg_.dim; }

  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override {
    std::vector<EmbeddingVector> out(texts.size(), EmbeddingVector::flagged_zero(cfg_.dim, tag_));
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < texts.size(); ++i)
      if (!text::trim(texts[i]).empty()) pending.push_back(i);

    for (std::size_t from = 0; from < pending.size(); from += cfg_.batch_size) {
      const std::size_t to = std::min(pending.size(), from + cfg_.batch_size);
      nlohmann::json request = {{"texts", nlohmann::json::array()}};
      for (std::size_t k = from; k < to; ++k) request["texts"].push_back(texts[pending[k]]);
      auto vectors = post(request, to - from);
      for (std::size_t k = from; k < to; ++k)
        out[pending[k]] = EmbeddingVector::normalized(std::move(vectors[k - from]), tag_);
    }
    return out;
  }

 private:
  std::vector<std::vector<double>> post(const nlohmann::json& request, std::size_t expected) const {
    httplib::Client client(base_);
    const auto secs = cfg_.timeout_ms / 1000;
    const auto usecs = (cfg_.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    auto res = client.Post(path_, request.dump(), "application/json");
    if (!res)
      fail(ErrorCode::provider_error,
           "embedding endpoint " + cfg_.endpoint + " unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
      fail(ErrorCode::provider_error,
           "embedding endpoint " + cfg_.endpoint + " returned status " + std::to_string(res->status));

    auto body = nlohmann::json::parse(res->body, nullptr, false);
    if (body.is_discarded() || !body.is_object())
      fail(ErrorCode::protocol_error, "embedding response is not a JSON object");
    try {
      const auto dim = body.at("dim").get<std::size_t>();
      if (dim != cfg_.dim)
        fail(ErrorCode::protocol_error,
             "embedding dim mismatch: expected " + std::to_string(cfg_.dim) + ", got " + std::to_string(dim));
      auto vectors = body.at("vectors").get<std::vector<std::vector<double>>>();
      if (vectors.size() != expected)
        fail(ErrorCode::protocol_error, "embedding response has " + std::to_string(vectors.size()) +
                                            " vectors for " + std::to_string(expected) + " texts");
      for (const auto& v : vectors)
        if (v.size() != cfg_.dim) fail(ErrorCode::protocol_error, "embedding vector length mismatch");
      return vectors;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::protocol_error, std::string("malformed embedding response: ") + e.what());
    }
  }

  ProviderConfig cfg_;
  std::string base_;
  std::string path_;
  std::string tag_;
};

inline std::unique_ptr<Provider> make_provider(const ProviderConfig& cfg, text::DocumentFrequency df) {
  if (cfg.kind == ProviderKind::remote_service) return std::make_unique<RemoteProvider>(cfg);
  return std::make_unique<LocalHashProvider>(cfg, std::move(df));
}

}  // namespace ikg::embed
