#include <algorithm>
#include <cctype>

#include "bioagents/error.h"
#include "bioagents/index.h"
#include "bioagents/text.h"

namespace bioagents::index {

namespace {

bool is_continuation(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }
bool is_ws(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Largest cut position in [lo, hi] matching `pred`, or 0 when none does.
template <typename Pred>
std::size_t last_cut(std::size_t lo, std::size_t hi, Pred pred) {
  for (std::size_t i = hi; i >= lo && i > 0; --i) {
    if (pred(i)) return i;
  }
  return 0;
}

std::size_t choose_end(const std::string& text, std::size_t start, const ChunkPolicy& policy) {
  const std::size_t lo = start + policy.overlap_chars + 1;
  const std::size_t hi = start + policy.max_chars;
  if (auto p = last_cut(lo, hi, [&](std::size_t i) {
        return i >= 2 && text[i - 1] == '\n' && text[i - 2] == '\n';
      })) {
    return p;
  }
  if (auto p = last_cut(lo, hi, [&](std::size_t i) {
        return i >= 2 && is_ws(text[i - 1]) &&
               (text[i - 2] == '.' || text[i - 2] == '!' || text[i - 2] == '?');
      })) {
    return p;
  }
  if (auto p = last_cut(lo, hi, [&](std::size_t i) { return is_ws(text[i - 1]); })) return p;
  std::size_t end = hi;
  while (end > lo && end < text.size() && is_continuation(text[end])) --end;
  return end;
}

}  // namespace

std::vector<DocChunk> chunk_document(const SourceDoc& doc, const ChunkPolicy& policy) {
  if (policy.max_chars == 0 || policy.overlap_chars >= policy.max_chars) {
    throw Error(ErrorCode::kInvalidArgument, "chunk policy needs max_chars > overlap_chars >= 0");
  }
  std::vector<DocChunk> chunks;
  const std::string& text = doc.text;
  if (is_blank(text)) return chunks;

  auto emit = [&](std::size_t begin, std::size_t end) {
    DocChunk c;
    c.chunk_id = doc.id + "#" + std::to_string(chunks.size());
    c.source_id = doc.id;
    c.text = text.substr(begin, end - begin);
    c.offset = begin;
    if (!doc.corpus.empty()) c.meta["corpus"] = doc.corpus;
    if (!doc.title.empty()) c.meta["title"] = doc.title;
    if (!doc.origin.empty()) c.meta["origin"] = doc.origin;
    chunks.push_back(std::move(c));
  };

  std::size_t start = 0;
  while (true) {
    if (text.size() - start <= policy.max_chars) {
      emit(start, text.size());
      break;
    }
    const std::size_t end = choose_end(text, start, policy);
    emit(start, end);
    std::size_t next = end - policy.overlap_chars;
    while (next > start + 1 && is_continuation(text[next])) --next;
    start = next;
  }
  return chunks;
}

std::string reconstruct(const std::vector<DocChunk>& chunks) {
  std::string out;
  for (const auto& c : chunks) {
    if (c.offset > out.size()) {
      throw Error(ErrorCode::kInvalidArgument, "chunk " + c.chunk_id + " leaves a gap");
    }
    const std::size_t skip = out.size() - c.offset;
    if (skip < c.text.size()) out.append(c.text, skip, std::string::npos);
  }
  return out;
}

}  // namespace bioagents::index
