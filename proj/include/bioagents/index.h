#pragma once

// Chunking, exact cosine top-k search over L2-normalized vectors, and the
// binary index file.
//
// Index file layout (little-endian):
//   char[4]  magic "BAIX"
//   u32      format version (1)
//   u32      dim
//   u64      entry count
//   u64      FNV-1a 64 checksum of the body
//   body:    per entry: str chunk_id, str source_id, str text, u64 offset,
//            u32 meta count, (str key, str value)*, f64[dim] vector
//   where str = u32 byte length + bytes.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "bioagents/embedding.h"
#include "bioagents/source_doc.h"

namespace bioagents::index {

struct DocChunk {
  std::string chunk_id;
  std::string source_id;
  std::string text;
  std::map<std::string, std::string> meta;
  // Byte offset of `text` within the source document.
  std::size_t offset = 0;

  bool operator==(const DocChunk&) const = default;
};

struct ChunkPolicy {
  std::size_t max_chars = 1200;
  std::size_t overlap_chars = 200;
};

// Consecutive chunks share `overlap_chars` bytes (a few more when needed to
// avoid splitting a UTF-8 sequence). Cuts prefer a paragraph break, then a
// sentence end, then whitespace, then a hard cut at max_chars.
std::vector<DocChunk> chunk_document(const SourceDoc& doc, const ChunkPolicy& policy = {});

// Inverse of chunking using each chunk's offset.
std::string reconstruct(const std::vector<DocChunk>& chunks);

struct IndexEntry {
  DocChunk chunk;
  EmbeddingVector vector;

  bool operator==(const IndexEntry&) const = default;
};

inline constexpr std::uint32_t kIndexFormatVersion = 1;

struct IndexSnapshot {
  std::size_t dim = 0;
  std::vector<IndexEntry> entries;
  std::uint32_t version = kIndexFormatVersion;

  bool operator==(const IndexSnapshot&) const = default;
};

// Hits are ordered by score descending, then chunk id. Scores closer than
// this are treated as equal.
inline constexpr double kScoreTieTolerance = 1e-12;

struct SearchHit {
  std::string chunk_id;
  double score = 0.0;
  DocChunk chunk;

  bool operator==(const SearchHit&) const = default;
};

// Single writer, many readers: searches run against an immutable snapshot and
// writers publish a new one.
class VectorIndex {
 public:
  explicit VectorIndex(std::size_t dim);
  explicit VectorIndex(IndexSnapshot snapshot);

  std::shared_ptr<const IndexSnapshot> snapshot() const;
  std::size_t dim() const { return dim_; }
  std::size_t size() const;
  bool empty() const { return size() == 0; }

  // Rejects duplicate ids (against the index or within `chunks`) before any
  // mutation or embedding call.
  void add_chunks(const std::vector<DocChunk>& chunks, EmbeddingBackend& backend);
  // Vectors are validated and normalized.
  void add_entries(std::vector<IndexEntry> entries);

  std::vector<SearchHit> search(std::string_view query, std::size_t k,
                                EmbeddingBackend& backend) const;
  std::vector<SearchHit> search_vector(const EmbeddingVector& query, std::size_t k) const;

 private:
  void check_new_ids(const std::vector<std::string>& ids,
                     const IndexSnapshot& current) const;

  std::size_t dim_;
  mutable std::mutex mu_;
  std::shared_ptr<const IndexSnapshot> current_;
};

std::string serialize_index(const IndexSnapshot& snapshot);
// Throws Error(kIntegrity) for truncation or checksum failure and
// Error(kVersionMismatch) for an unsupported format version.
IndexSnapshot deserialize_index(std::string_view bytes);

void persist_index(const VectorIndex& index, const std::string& path);
IndexSnapshot load_index(const std::string& path);

}  // namespace bioagents::index
