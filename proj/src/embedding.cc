#include "bioagents/embedding.h"

#include <cctype>
#include <cmath>

#include <nlohmann/json.hpp>

#include "bioagents/error.h"
#include "bioagents/gateway.h"
#include "bioagents/http_retry.h"
#include "bioagents/text.h"

namespace bioagents::index {

using nlohmann::json;

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

HashEmbeddingBackend::HashEmbeddingBackend(std::size_t dim, std::size_t max_batch)
    : dim_(dim), max_batch_(max_batch) {
  if (dim_ == 0) throw Error(ErrorCode::kInvalidArgument, "embedding dim must be > 0");
  if (max_batch_ == 0) throw Error(ErrorCode::kInvalidArgument, "max_batch must be > 0");
}

std::vector<double> HashEmbeddingBackend::embed_one(std::string_view text) const {
  std::vector<double> v(dim_, 0.0);
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    const auto h = fnv1a64(token);
    v[h % dim_] += ((h >> 63) & 1U) ? -1.0 : 1.0;
    token.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  if (l2_norm(v) == 0.0) v[fnv1a64(text) % dim_] = 1.0;
  return v;
}

std::vector<std::vector<double>> HashEmbeddingBackend::embed(std::span<const std::string> texts) {
  if (texts.size() > max_batch_) {
    throw Error(ErrorCode::kInvalidArgument, "batch exceeds backend limit");
  }
  ++calls_;
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

std::string serialize_embedding_request(const std::string& model,
                                        std::span<const std::string> texts) {
  json body;
  body["model"] = model;
  body["input"] = std::vector<std::string>(texts.begin(), texts.end());
  return body.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::vector<std::vector<double>> parse_embedding_response(const std::string& body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::kParse, "embedding response is not JSON");
  try {
    const auto& data = doc.at("data");
    std::vector<std::vector<double>> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::size_t slot = data[i].contains("index") ? data[i]["index"].get<std::size_t>() : i;
      if (slot >= out.size()) throw Error(ErrorCode::kParse, "embedding index out of range");
      out[slot] = data[i].at("embedding").get<std::vector<double>>();
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("unexpected embedding shape: ") + e.what());
  }
}

RemoteEmbeddingBackend::RemoteEmbeddingBackend(RemoteEmbeddingOptions options)
    : options_(std::move(options)) {
  if (options_.base_url.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "remote embedding backend requires base_url");
  }
  gateway::split_url(options_.base_url);
}

std::size_t RemoteEmbeddingBackend::dim() {
  {
    std::lock_guard lock(mu_);
    if (dim_) return *dim_;
  }
  const std::string probe[] = {"dimension probe"};
  embed(probe);
  std::lock_guard lock(mu_);
  return *dim_;
}

std::vector<std::vector<double>> RemoteEmbeddingBackend::embed(std::span<const std::string> texts) {
  const auto url = gateway::split_url(options_.base_url);
  const auto body = serialize_embedding_request(options_.model, texts);
  auto outcome = detail::with_retries(
      [&] {
        httplib::Client client(url.origin);
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
        client.set_connection_timeout(secs.count(), 0);
        client.set_read_timeout(secs.count(), 0);
        httplib::Headers headers;
        if (!options_.api_key.empty()) {
          headers.emplace("Authorization", "Bearer " + options_.api_key);
        }
        return client.Post(url.path_prefix + "/v1/embeddings", headers, body, "application/json");
      },
      options_.retries, options_.backoff, [this] { ++calls_; },
      "embeddings at " + options_.base_url);
  auto vectors = parse_embedding_response(outcome.body);
  if (!vectors.empty()) {
    std::lock_guard lock(mu_);
    if (!dim_) dim_ = vectors.front().size();
  }
  return vectors;
}

std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts,
                                         EmbeddingBackend& backend) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  if (texts.empty()) return out;
  std::size_t dim = 0;
  const std::size_t limit = backend.max_batch();
  for (std::size_t start = 0; start < texts.size(); start += limit) {
    auto batch = texts.subspan(start, std::min(limit, texts.size() - start));
    auto raw = backend.embed(batch);
    if (raw.size() != batch.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "backend returned " + std::to_string(raw.size()) + " vectors for " +
                      std::to_string(batch.size()) + " inputs");
    }
    // Asked after the first batch so a remote backend learns it from the reply.
    if (dim == 0) dim = backend.dim();
    for (auto& v : raw) {
      if (v.size() != dim) {
        throw Error(ErrorCode::kDimensionMismatch, "expected dim " + std::to_string(dim) +
                                                       ", got " + std::to_string(v.size()));
      }
      for (double x : v) {
        if (!std::isfinite(x)) throw Error(ErrorCode::kInvalidArgument, "non-finite embedding");
      }
      const double norm = l2_norm(v);
      if (norm == 0.0) throw Error(ErrorCode::kInvalidArgument, "all-zero embedding");
      for (double& x : v) x /= norm;
      out.push_back(EmbeddingVector{std::move(v)});
    }
  }
  return out;
}

}  // namespace bioagents::index
