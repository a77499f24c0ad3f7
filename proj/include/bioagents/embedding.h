#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bioagents::index {

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

double l2_norm(std::span<const double> v);

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;

  virtual std::size_t dim() = 0;
  virtual std::size_t max_batch() const = 0;
  // Raw vectors, one per input, in order. Callers go through embed_batch.
  virtual std::vector<std::vector<double>> embed(std::span<const std::string> texts) = 0;
  virtual std::size_t calls() const = 0;
};

// Token-hash bag of words: each lowercase alphanumeric token adds a signed unit
// to one of `dim` buckets. No network, fully reproducible.
class HashEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit HashEmbeddingBackend(std::size_t dim = 64, std::size_t max_batch = 1000);

  std::size_t dim() override { return dim_; }
  std::size_t max_batch() const override { return max_batch_; }
  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override;
  std::size_t calls() const override { return calls_.load(); }

  std::vector<double> embed_one(std::string_view text) const;

 private:
  std::size_t dim_;
  std::size_t max_batch_;
  std::atomic<std::size_t> calls_{0};
};

struct RemoteEmbeddingOptions {
  std::string base_url;
  std::string model = "text-embedding-ada-002";
  std::string api_key;
  std::size_t max_batch = 1000;
  std::chrono::milliseconds timeout{60000};
  int retries = 2;
  std::chrono::milliseconds backoff{500};
};

// OpenAI-compatible `/v1/embeddings`. The dimension is learned from the first
// response (or a one-off probe when dim() is asked first).
class RemoteEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit RemoteEmbeddingBackend(RemoteEmbeddingOptions options);

  std::size_t dim() override;
  std::size_t max_batch() const override { return options_.max_batch; }
  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override;
  std::size_t calls() const override { return calls_.load(); }

 private:
  RemoteEmbeddingOptions options_;
  std::mutex mu_;
  std::optional<std::size_t> dim_;
  std::atomic<std::size_t> calls_{0};
};

std::string serialize_embedding_request(const std::string& model,
                                        std::span<const std::string> texts);
std::vector<std::vector<double>> parse_embedding_response(const std::string& body);

// Splits into backend-sized batches, checks count/dimension/finiteness, and
// L2-normalizes every vector. Throws Error(kDimensionMismatch) or
// Error(kInvalidArgument) for zero or non-finite vectors.
std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts,
                                         EmbeddingBackend& backend);

}  // namespace bioagents::index
