#include <algorithm>
#include <filesystem>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "bioagents/error.h"
#include "bioagents/ingest.h"
#include "bioagents/text.h"

namespace bioagents::ingest {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kDocExtensions = {".md", ".markdown", ".txt", ".yml", ".yaml", ".nf"};

std::string title_of(const std::string& text, const fs::path& path) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = trim(std::string_view(text).substr(pos, nl == std::string::npos ? text.npos : nl - pos));
    pos = nl == std::string::npos ? text.size() : nl + 1;
    if (line.starts_with("#") && !line.starts_with("#!")) {
      line.remove_prefix(line.find_first_not_of('#'));
      auto t = trim(line);
      if (!t.empty()) return std::string(t);
    }
    if (line.starts_with("name:")) {
      auto t = trim(line.substr(5));
      if (!t.empty()) return std::string(t);
    }
  }
  return path.stem().string();
}

}  // namespace

NfcoreIngest ingest_nfcore(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kNotFound, "nf-core directory missing: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (kDocExtensions.count(to_lower(entry.path().extension().string())) == 0) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
    return fs::relative(a, dir).generic_string() < fs::relative(b, dir).generic_string();
  });

  NfcoreIngest out;
  for (const auto& path : files) {
    std::string text;
    try {
      text = read_file(path.string());
    } catch (const Error& e) {
      spdlog::warn("nf-core: {}", e.what());
      ++out.unreadable_files;
      continue;
    }
    if (is_blank(text)) {
      ++out.empty_files;
      continue;
    }
    SourceDoc doc;
    doc.id = fs::relative(path, dir).generic_string();
    doc.title = title_of(text, path);
    doc.text = std::move(text);
    doc.origin = path.string();
    doc.corpus = "nfcore";
    out.docs.push_back(std::move(doc));
  }
  return out;
}

std::string serialize_source_docs(const std::vector<SourceDoc>& docs) {
  std::string out;
  for (const auto& d : docs) {
    json j = {{"id", d.id}, {"title", d.title}, {"text", d.text}, {"origin", d.origin},
              {"corpus", d.corpus}};
    out += j.dump(-1, ' ', false, json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

std::vector<SourceDoc> parse_source_docs(std::string_view jsonl) {
  std::vector<SourceDoc> docs;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < jsonl.size()) {
    auto nl = jsonl.find('\n', pos);
    auto line = jsonl.substr(pos, nl == std::string_view::npos ? jsonl.npos : nl - pos);
    pos = nl == std::string_view::npos ? jsonl.size() : nl + 1;
    ++line_no;
    if (is_blank(line)) continue;
    try {
      auto j = json::parse(line);
      docs.push_back(SourceDoc{j.at("id").get<std::string>(), j.value("title", ""),
                               j.at("text").get<std::string>(), j.value("origin", ""),
                               j.value("corpus", "")});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse,
                  "source doc line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return docs;
}

}  // namespace bioagents::ingest
