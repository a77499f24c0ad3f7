#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <random>
#include <thread>

#include "bioagents/embedding.h"
#include "bioagents/error.h"
#include "bioagents/index.h"
#include "bioagents/ingest.h"
#include "bioagents/text.h"
#include "support.h"

using namespace bioagents;
using namespace bioagents::index;
using nlohmann::json;

namespace {

SourceDoc doc(const std::string& id, const std::string& text) {
  return SourceDoc{id, id, text, "", "nfcore"};
}

std::string random_words(std::mt19937& rng, int n) {
  static const std::vector<std::string> vocab = {
      "fastq", "reads", "quality", "align", "genome", "reference", "star", "bwa", "variant",
      "call", "sample", "trim", "adapter", "index", "sort", "bam", "vcf", "assembly", "contig",
      "lineage", "pipeline", "module", "nextflow", "container", "report", "coverage"};
  std::string s;
  for (int i = 0; i < n; ++i) s += (i ? " " : "") + vocab[rng() % vocab.size()];
  return s;
}

struct OracleHit {
  std::string id;
  double score;
};

// Independent scan: normalize, dot, sort by (score desc, id asc).
std::vector<OracleHit> brute_force(const std::vector<std::pair<std::string, std::vector<double>>>& rows,
                                   std::vector<double> q, std::size_t k) {
  auto normalize = [](std::vector<double>& v) {
    double n = 0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (double& x : v) x /= n;
  };
  normalize(q);
  std::vector<OracleHit> all;
  for (auto [id, v] : rows) {
    normalize(v);
    double dot = 0;
    for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * q[i];
    all.push_back({id, dot});
  }
  std::sort(all.begin(), all.end(), [](const OracleHit& a, const OracleHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

class CountingBackend : public EmbeddingBackend {
 public:
  CountingBackend(std::size_t dim, std::size_t max_batch, std::size_t wrong_dim = 0)
      : dim_(dim), max_batch_(max_batch), wrong_dim_(wrong_dim) {}
  std::size_t dim() override { return dim_; }
  std::size_t max_batch() const override { return max_batch_; }
  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override {
    ++calls_;
    largest_ = std::max(largest_, texts.size());
    std::vector<std::vector<double>> out;
    for (const auto& t : texts) {
      std::vector<double> v(wrong_dim_ ? wrong_dim_ : dim_, 0.5);
      v[0] += static_cast<double>(t.size());
      out.push_back(std::move(v));
    }
    return out;
  }
  std::size_t calls() const override { return calls_; }
  std::size_t largest() const { return largest_; }

 private:
  std::size_t dim_, max_batch_, wrong_dim_;
  std::size_t calls_ = 0;
  std::size_t largest_ = 0;
};

std::vector<DocChunk> make_chunks(int n, std::mt19937& rng, const std::string& prefix = "c") {
  std::vector<DocChunk> chunks;
  for (int i = 0; i < n; ++i) {
    DocChunk c;
    c.chunk_id = prefix + std::to_string(i);
    c.source_id = "src" + std::to_string(i % 7);
    c.text = random_words(rng, 3 + static_cast<int>(rng() % 20)) + " " + c.chunk_id;
    c.meta["corpus"] = i % 2 ? "nfcore" : "ontology";
    chunks.push_back(std::move(c));
  }
  return chunks;
}

}  // namespace

TEST_CASE("short text is one chunk") {
  auto chunks = chunk_document(doc("d", "0123456789"), {100, 20});
  REQUIRE(chunks.size() == 1);
  CHECK(chunks[0].text == "0123456789");
  CHECK(chunks[0].chunk_id == "d#0");
  CHECK(chunks[0].meta.at("corpus") == "nfcore");
}

TEST_CASE("empty document has no chunks") {
  CHECK(chunk_document(doc("d", ""), {}).empty());
}

TEST_CASE("250 characters with overlap") {
  std::mt19937 rng(5);
  std::string text = random_words(rng, 60).substr(0, 250);
  REQUIRE(text.size() == 250);
  auto chunks = chunk_document(doc("d", text), {100, 20});
  CHECK(chunks.size() >= 3);
  CHECK(chunks[0].offset == 0);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    CHECK(chunks[i].text.size() <= 100);
    if (i + 1 < chunks.size()) {
      CHECK(chunks[i + 1].offset == chunks[i].offset + chunks[i].text.size() - 20);
      // cut falls after whitespace
      CHECK(text[chunks[i].offset + chunks[i].text.size() - 1] == ' ');
    }
  }
  CHECK(reconstruct(chunks) == text);
}

TEST_CASE("paragraph boundaries win") {
  std::string p = "Paragraph text about reads. It has two sentences.";
  std::string text = p + "\n\n" + p + "\n\n" + p;
  auto chunks = chunk_document(doc("d", text), {60, 0});
  REQUIRE(chunks.size() == 3);
  CHECK(trim(chunks[0].text) == p);
  CHECK(trim(chunks[1].text) == p);
  CHECK(trim(chunks[2].text) == p);
  CHECK(reconstruct(chunks) == text);
}

TEST_CASE("property: chunk coverage, size and overlap") {
  std::mt19937 rng(31337);
  const std::vector<std::string> pieces = {"word ", "longerword ", "end. ", "\n\n", "ü", "日本", "x", "  ", "?\n"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    for (int i = 0, n = static_cast<int>(rng() % 200); i < n; ++i) text += pieces[rng() % pieces.size()];
    const std::size_t max_chars = 8 + rng() % 120;
    const std::size_t overlap = rng() % (max_chars / 2);
    auto chunks = chunk_document(doc("d", text), {max_chars, overlap});
    if (is_blank(text)) {
      CHECK(chunks.empty());
      continue;
    }
    CHECK(reconstruct(chunks) == text);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      CHECK(chunks[i].text.size() <= max_chars);
      CHECK_FALSE(chunks[i].text.empty());
      CHECK(text.compare(chunks[i].offset, chunks[i].text.size(), chunks[i].text) == 0);
      if (i + 1 < chunks.size()) {
        const auto end = chunks[i].offset + chunks[i].text.size();
        CHECK(chunks[i + 1].offset > chunks[i].offset);
        CHECK(chunks[i + 1].offset <= end - std::min(overlap, end - chunks[i].offset - 1));
        CHECK(end - chunks[i + 1].offset >= std::min(overlap, chunks[i].text.size() - 1));
      }
    }
  }
}

TEST_CASE("hash embeddings are deterministic and unit length") {
  HashEmbeddingBackend backend;
  std::vector<std::string> texts = {"a", "b", "a"};
  auto v = embed_batch(texts, backend);
  REQUIRE(v.size() == 3);
  CHECK(v[0] == v[2]);
  CHECK(v[0].dim() == 64);
  for (const auto& e : v) CHECK(std::abs(l2_norm(e.values) - 1.0) < 1e-9);
  CHECK(backend.calls() == 1);
}

TEST_CASE("large batches are split") {
  CountingBackend backend(8, 1000);
  std::vector<std::string> texts(2001, "x");
  auto v = embed_batch(texts, backend);
  CHECK(v.size() == 2001);
  CHECK(backend.calls() == 3);
  CHECK(backend.largest() == 1000);
}

TEST_CASE("dimension mismatch is a hard error") {
  CountingBackend backend(8, 10, 5);
  std::vector<std::string> texts = {"x"};
  try {
    embed_batch(texts, backend);
    FAIL("expected mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
  }
  VectorIndex idx(16);
  HashEmbeddingBackend other(64);
  std::mt19937 rng(1);
  CHECK_THROWS_AS(idx.add_chunks(make_chunks(2, rng), other), Error);
  CHECK(idx.size() == 0);
}

TEST_CASE("add_chunks accumulates and rejects duplicates") {
  std::mt19937 rng(2);
  HashEmbeddingBackend backend;
  VectorIndex idx(64);
  idx.add_chunks(make_chunks(3, rng, "a"), backend);
  idx.add_chunks(make_chunks(2, rng, "b"), backend);
  CHECK(idx.size() == 5);
  const auto calls = backend.calls();
  try {
    idx.add_chunks(make_chunks(1, rng, "a"), backend);
    FAIL("duplicate id accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDuplicate);
  }
  CHECK(idx.size() == 5);
  CHECK(backend.calls() == calls);
}

TEST_CASE("every added chunk is reachable") {
  std::mt19937 rng(3);
  HashEmbeddingBackend backend;
  VectorIndex idx(64);
  auto chunks = make_chunks(100, rng);
  idx.add_chunks(chunks, backend);
  auto all = idx.search("anything at all", 100, backend);
  CHECK(all.size() == 100);
  for (const auto& c : chunks) {
    auto hits = idx.search(c.text, 1, backend);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("hand-computed cosine ranking") {
  VectorIndex idx(2);
  std::vector<IndexEntry> entries;
  for (auto [id, v] : std::vector<std::pair<std::string, std::vector<double>>>{
           {"e1", {1, 0}}, {"e2", {0, 1}}, {"e3", {0.7071, 0.7071}}}) {
    DocChunk c;
    c.chunk_id = id;
    c.source_id = id;
    c.text = id;
    entries.push_back({c, {v}});
  }
  idx.add_entries(entries);
  auto hits = idx.search_vector({{1, 0}}, 2);
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].chunk_id == "e1");
  CHECK(std::abs(hits[0].score - 1.0) < 1e-9);
  CHECK(hits[1].chunk_id == "e3");
  CHECK(std::abs(hits[1].score - std::sqrt(0.5)) < 1e-9);
  auto self = idx.search_vector({{0, 3}}, 1);
  REQUIRE(self.size() == 1);
  CHECK(self[0].chunk_id == "e2");
  CHECK(std::abs(self[0].score - 1.0) < 1e-9);
}

TEST_CASE("ties are broken by chunk id") {
  VectorIndex idx(2);
  std::vector<IndexEntry> entries;
  for (const char* id : {"zz", "aa", "mm"}) {
    DocChunk c;
    c.chunk_id = id;
    c.source_id = id;
    c.text = id;
    entries.push_back({c, {{1, 1}}});
  }
  idx.add_entries(entries);
  auto hits = idx.search_vector({{1, 0}}, 3);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].chunk_id == "aa");
  CHECK(hits[1].chunk_id == "mm");
  CHECK(hits[2].chunk_id == "zz");
}

TEST_CASE("rounding noise does not reorder tied scores") {
  VectorIndex idx(2);
  std::vector<IndexEntry> entries;
  auto entry = [](const std::string& id, std::vector<double> v) {
    DocChunk c;
    c.chunk_id = id;
    c.source_id = id;
    c.text = id;
    return IndexEntry{c, {std::move(v)}};
  };
  // cosines 1 and 1 - 5e-15
  entries.push_back(entry("zz", {1, 0}));
  entries.push_back(entry("aa", {1, 1e-7}));
  entries.push_back(entry("mm", {1, 1e-3}));
  idx.add_entries(entries);
  auto hits = idx.search_vector({{1, 0}}, 3);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].chunk_id == "aa");
  CHECK(hits[1].chunk_id == "zz");
  CHECK(hits[2].chunk_id == "mm");
  CHECK(hits[0].score < hits[1].score);
}

TEST_CASE("empty index search warns and returns nothing") {
  HashEmbeddingBackend backend;
  VectorIndex idx(64);
  CHECK(idx.search("q", 3, backend).empty());
  CHECK_THROWS_AS(idx.search("q", 0, backend), Error);
}

TEST_CASE("property: search matches the brute-force oracle") {
  std::mt19937 rng(4242);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t dim = 2 + rng() % 40;
    const std::size_t n = 1 + rng() % 300;
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    std::vector<IndexEntry> entries;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> v(dim);
      for (auto& x : v) x = normal(rng);
      // occasional exact duplicates exercise tie-breaking
      if (i > 0 && rng() % 10 == 0) v = rows[rng() % rows.size()].second;
      DocChunk c;
      c.chunk_id = "k" + std::to_string(rng() % 100000) + "-" + std::to_string(i);
      c.source_id = "s";
      c.text = c.chunk_id;
      rows.emplace_back(c.chunk_id, v);
      entries.push_back({c, {v}});
    }
    VectorIndex idx(dim);
    idx.add_entries(entries);
    for (int q = 0; q < 10; ++q) {
      std::vector<double> query(dim);
      for (auto& x : query) x = normal(rng);
      const std::size_t k = 1 + rng() % (n + 3);
      auto hits = idx.search_vector({query}, k);
      auto oracle = brute_force(rows, query, k);
      REQUIRE(hits.size() == oracle.size());
      for (std::size_t i = 0; i < hits.size(); ++i) {
        CHECK(std::abs(hits[i].score - oracle[i].score) < 1e-9);
        CHECK(hits[i].score >= -1.0);
        CHECK(hits[i].score <= 1.0);
        if (i > 0) {
          CHECK(hits[i - 1].score >= hits[i].score);
        }
      }
      std::vector<std::string> got, want;
      for (const auto& h : hits) got.push_back(h.chunk_id);
      for (const auto& o : oracle) want.push_back(o.id);
      CHECK(got == want);
    }
  }
}

TEST_CASE("stored vectors are unit length") {
  std::mt19937 rng(8);
  HashEmbeddingBackend backend;
  VectorIndex idx(64);
  idx.add_chunks(make_chunks(50, rng), backend);
  for (const auto& e : idx.snapshot()->entries) CHECK(std::abs(l2_norm(e.vector.values) - 1.0) < 1e-9);
}

TEST_CASE("persistence round trip") {
  std::mt19937 rng(9);
  HashEmbeddingBackend backend;
  VectorIndex idx(64);
  auto chunks = make_chunks(50, rng);
  chunks[3].meta["note"] = "ünïcödé";
  chunks[4].offset = 1234;
  idx.add_chunks(chunks, backend);
  testing::TempDir dir;
  persist_index(idx, dir / "idx.bin");
  auto loaded = load_index(dir / "idx.bin");
  CHECK(loaded == *idx.snapshot());
  CHECK(serialize_index(loaded) == read_file(dir / "idx.bin"));
}

TEST_CASE("corruption and version errors") {
  std::mt19937 rng(10);
  HashEmbeddingBackend backend;
  VectorIndex idx(64);
  idx.add_chunks(make_chunks(5, rng), backend);
  const auto bytes = serialize_index(*idx.snapshot());

  auto flipped = bytes;
  flipped[20] ^= 0x01;  // inside the checksum field
  try {
    deserialize_index(flipped);
    FAIL("checksum flip accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIntegrity);
  }
  auto body_flip = bytes;
  body_flip[bytes.size() - 3] ^= 0x40;
  CHECK_THROWS_AS(deserialize_index(body_flip), Error);
  CHECK_THROWS_AS(deserialize_index(bytes.substr(0, bytes.size() - 10)), Error);

  auto version = bytes;
  version[4] = 9;
  try {
    deserialize_index(version);
    FAIL("future version accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kVersionMismatch);
  }
  CHECK_THROWS_AS(deserialize_index("JUNK"), Error);
}

TEST_CASE("empty index round trip keeps dim") {
  VectorIndex idx(17);
  auto back = deserialize_index(serialize_index(*idx.snapshot()));
  CHECK(back.dim == 17);
  CHECK(back.entries.empty());
}

TEST_CASE("readers see consistent snapshots while a writer adds") {
  HashEmbeddingBackend backend;
  VectorIndex idx(64);
  std::mt19937 rng(11);
  idx.add_chunks(make_chunks(10, rng, "base"), backend);
  std::atomic<bool> done{false};
  std::atomic<int> bad{0};
  std::vector<std::thread> readers;
  for (int r = 0; r < 4; ++r) {
    readers.emplace_back([&] {
      HashEmbeddingBackend local;
      while (!done) {
        auto snap = idx.snapshot();
        auto hits = idx.search("reads quality", 1000, local);
        if (hits.size() < 10) ++bad;
        for (const auto& e : snap->entries) {
          if (e.vector.dim() != 64) ++bad;
        }
      }
    });
  }
  std::mt19937 wrng(12);
  for (int batch = 0; batch < 20; ++batch) idx.add_chunks(make_chunks(5, wrng, "w" + std::to_string(batch) + "-"), backend);
  done = true;
  for (auto& t : readers) t.join();
  CHECK(bad == 0);
  CHECK(idx.size() == 110);
}

TEST_CASE("remote embeddings learn their dimension") {
  std::atomic<int> hits{0};
  testing::LocalServer server([&](httplib::Server& s) {
    s.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      auto body = json::parse(req.body);
      json data = json::array();
      for (const auto& t : body.at("input")) {
        data.push_back({{"embedding", {1.0, static_cast<double>(t.get<std::string>().size()), 0.0}}});
      }
      res.set_content(json{{"data", data}, {"model", body.at("model")}}.dump(), "application/json");
    });
  });
  RemoteEmbeddingOptions opts;
  opts.base_url = server.url();
  opts.max_batch = 2;
  RemoteEmbeddingBackend backend(opts);
  std::vector<std::string> texts = {"a", "bb", "ccc"};
  auto v = embed_batch(texts, backend);
  CHECK(v.size() == 3);
  CHECK(backend.dim() == 3);
  CHECK(hits == 2);
  CHECK(std::abs(l2_norm(v[2].values) - 1.0) < 1e-9);
  CHECK(serialize_embedding_request("m", texts) == R"({"input":["a","bb","ccc"],"model":"m"})");
}

TEST_CASE("workflow documentation retrieval picks the matching module") {
  auto docs = ingest::ingest_nfcore(testing::fixture("nfcore")).docs;
  HashEmbeddingBackend backend;
  VectorIndex idx(64);
  for (const auto& d : docs) idx.add_chunks(chunk_document(d), backend);
  auto hits = idx.search("How would I provide quality metrics on FASTQ files?", 1, backend);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].chunk.meta.at("corpus") == "nfcore");
  CHECK(hits[0].chunk.source_id == "modules/nf-core/fastqc/meta.yml");
}
