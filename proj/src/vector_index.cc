#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "bioagents/error.h"
#include "bioagents/index.h"
#include "bioagents/text.h"

namespace bioagents::index {

VectorIndex::VectorIndex(std::size_t dim)
    : dim_(dim), current_(std::make_shared<IndexSnapshot>(IndexSnapshot{dim, {}})) {
  if (dim_ == 0) throw Error(ErrorCode::kInvalidArgument, "index dim must be > 0");
}

VectorIndex::VectorIndex(IndexSnapshot snapshot) : dim_(snapshot.dim) {
  if (dim_ == 0) throw Error(ErrorCode::kInvalidArgument, "index dim must be > 0");
  std::unordered_set<std::string> seen;
  for (const auto& e : snapshot.entries) {
    if (e.vector.dim() != dim_) throw Error(ErrorCode::kDimensionMismatch, "entry dim mismatch");
    if (!seen.insert(e.chunk.chunk_id).second) {
      throw Error(ErrorCode::kDuplicate, "duplicate chunk id " + e.chunk.chunk_id);
    }
  }
  current_ = std::make_shared<IndexSnapshot>(std::move(snapshot));
}

std::shared_ptr<const IndexSnapshot> VectorIndex::snapshot() const {
  std::lock_guard lock(mu_);
  return current_;
}

std::size_t VectorIndex::size() const { return snapshot()->entries.size(); }

void VectorIndex::check_new_ids(const std::vector<std::string>& ids,
                                const IndexSnapshot& current) const {
  std::unordered_set<std::string> existing;
  existing.reserve(current.entries.size() + ids.size());
  for (const auto& e : current.entries) existing.insert(e.chunk.chunk_id);
  for (const auto& id : ids) {
    if (!existing.insert(id).second) {
      throw Error(ErrorCode::kDuplicate, "chunk id already present: " + id);
    }
  }
}

void VectorIndex::add_chunks(const std::vector<DocChunk>& chunks, EmbeddingBackend& backend) {
  if (chunks.empty()) return;
  std::vector<std::string> ids;
  std::vector<std::string> texts;
  ids.reserve(chunks.size());
  texts.reserve(chunks.size());
  for (const auto& c : chunks) {
    if (c.text.empty()) throw Error(ErrorCode::kInvalidArgument, "chunk " + c.chunk_id + " is empty");
    ids.push_back(c.chunk_id);
    texts.push_back(c.text);
  }
  check_new_ids(ids, *snapshot());
  if (backend.dim() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "backend dim " + std::to_string(backend.dim()) +
                                                   " != index dim " + std::to_string(dim_));
  }
  auto vectors = embed_batch(texts, backend);
  std::vector<IndexEntry> entries;
  entries.reserve(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    entries.push_back(IndexEntry{chunks[i], std::move(vectors[i])});
  }
  add_entries(std::move(entries));
}

void VectorIndex::add_entries(std::vector<IndexEntry> entries) {
  for (auto& e : entries) {
    if (e.vector.dim() != dim_) {
      throw Error(ErrorCode::kDimensionMismatch, "entry " + e.chunk.chunk_id + " has dim " +
                                                     std::to_string(e.vector.dim()));
    }
    const double norm = l2_norm(e.vector.values);
    if (!std::isfinite(norm) || norm == 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "entry " + e.chunk.chunk_id + " has a bad vector");
    }
    for (double& x : e.vector.values) x /= norm;
  }
  std::lock_guard lock(mu_);
  std::vector<std::string> ids;
  for (const auto& e : entries) ids.push_back(e.chunk.chunk_id);
  check_new_ids(ids, *current_);
  auto next = std::make_shared<IndexSnapshot>(*current_);
  for (auto& e : entries) next->entries.push_back(std::move(e));
  current_ = std::move(next);
}

std::vector<SearchHit> VectorIndex::search(std::string_view query, std::size_t k,
                                           EmbeddingBackend& backend) const {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (empty()) {
    spdlog::warn("search on an empty index");
    return {};
  }
  const std::string text(query);
  auto q = embed_batch(std::span<const std::string>(&text, 1), backend);
  return search_vector(q.front(), k);
}

std::vector<SearchHit> VectorIndex::search_vector(const EmbeddingVector& query,
                                                  std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (query.dim() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "query dim " + std::to_string(query.dim()) +
                                                   " != index dim " + std::to_string(dim_));
  }
  auto snap = snapshot();
  if (snap->entries.empty()) {
    spdlog::warn("search on an empty index");
    return {};
  }
  const double qnorm = l2_norm(query.values);
  if (qnorm == 0.0) throw Error(ErrorCode::kInvalidArgument, "zero query vector");
  std::vector<double> q(query.values);
  for (double& x : q) x /= qnorm;

  std::vector<std::pair<double, const IndexEntry*>> scored;
  scored.reserve(snap->entries.size());
  for (const auto& e : snap->entries) {
    double dot = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) dot += q[i] * e.vector.values[i];
    scored.emplace_back(std::clamp(dot, -1.0, 1.0), &e);
  }
  const std::size_t n = std::min(k, scored.size());
  const auto by_id = [](const auto& a, const auto& b) {
    return a.second->chunk.chunk_id < b.second->chunk.chunk_id;
  };
  std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return by_id(a, b);
  });
  // Scores that differ only by rounding noise count as tied and fall back to
  // chunk id order.
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < scored.size() && scored[start].first - scored[end].first <= kScoreTieTolerance) ++end;
    std::sort(scored.begin() + static_cast<std::ptrdiff_t>(start),
              scored.begin() + static_cast<std::ptrdiff_t>(end), by_id);
    start = end;
  }
  std::vector<SearchHit> hits;
  hits.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    hits.push_back(SearchHit{scored[i].second->chunk.chunk_id, scored[i].first,
                             scored[i].second->chunk});
  }
  return hits;
}

// -- persistence ---------------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little,
              "index serialization assumes a little-endian host");

constexpr char kMagic[4] = {'B', 'A', 'I', 'X'};
constexpr std::size_t kHeaderSize = 4 + 4 + 4 + 8 + 8;

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_str(std::string& out, std::string_view s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_str() {
    auto n = get<std::uint32_t>();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::kIntegrity, "index file truncated");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_index(const IndexSnapshot& snapshot) {
  std::string body;
  for (const auto& e : snapshot.entries) {
    put_str(body, e.chunk.chunk_id);
    put_str(body, e.chunk.source_id);
    put_str(body, e.chunk.text);
    put<std::uint64_t>(body, e.chunk.offset);
    put<std::uint32_t>(body, static_cast<std::uint32_t>(e.chunk.meta.size()));
    for (const auto& [k, v] : e.chunk.meta) {
      put_str(body, k);
      put_str(body, v);
    }
    if (e.vector.dim() != snapshot.dim) {
      throw Error(ErrorCode::kDimensionMismatch, "entry " + e.chunk.chunk_id + " dim mismatch");
    }
    for (double x : e.vector.values) put<double>(body, x);
  }
  std::string out;
  out.reserve(kHeaderSize + body.size());
  out.append(kMagic, 4);
  put<std::uint32_t>(out, snapshot.version);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(snapshot.dim));
  put<std::uint64_t>(out, snapshot.entries.size());
  put<std::uint64_t>(out, fnv1a64(body));
  out += body;
  return out;
}

IndexSnapshot deserialize_index(std::string_view bytes) {
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::kIntegrity, "not an index file");
  }
  Reader header(bytes.substr(4, kHeaderSize - 4));
  IndexSnapshot snap;
  snap.version = header.get<std::uint32_t>();
  if (snap.version != kIndexFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "unsupported index format version " + std::to_string(snap.version));
  }
  snap.dim = header.get<std::uint32_t>();
  const auto count = header.get<std::uint64_t>();
  const auto checksum = header.get<std::uint64_t>();
  const auto body = bytes.substr(kHeaderSize);
  if (fnv1a64(body) != checksum) throw Error(ErrorCode::kIntegrity, "index checksum mismatch");

  Reader r(body);
  for (std::uint64_t i = 0; i < count; ++i) {
    IndexEntry e;
    e.chunk.chunk_id = r.get_str();
    e.chunk.source_id = r.get_str();
    e.chunk.text = r.get_str();
    e.chunk.offset = r.get<std::uint64_t>();
    auto metas = r.get<std::uint32_t>();
    for (std::uint32_t m = 0; m < metas; ++m) {
      auto k = r.get_str();
      e.chunk.meta[k] = r.get_str();
    }
    e.vector.values.resize(snap.dim);
    for (auto& x : e.vector.values) x = r.get<double>();
    snap.entries.push_back(std::move(e));
  }
  if (!r.done()) throw Error(ErrorCode::kIntegrity, "trailing bytes in index file");
  return snap;
}

void persist_index(const VectorIndex& index, const std::string& path) {
  write_file_atomic(path, serialize_index(*index.snapshot()));
}

IndexSnapshot load_index(const std::string& path) { return deserialize_index(read_file(path)); }

}  // namespace bioagents::index
