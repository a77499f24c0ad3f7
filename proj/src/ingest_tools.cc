#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "bioagents/error.h"
#include "bioagents/http_retry.h"
#include "bioagents/ingest.h"
#include "bioagents/text.h"

namespace bioagents::ingest {

using nlohmann::json;

namespace {

long long downloads_of(const json& tool) {
  for (const char* key : {"downloads", "pulls", "download_count"}) {
    auto it = tool.find(key);
    if (it != tool.end() && it->is_number()) return it->get<long long>();
  }
  return 0;
}

std::string version_name(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_object()) {
    for (const char* key : {"name", "id"}) {
      auto it = v.find(key);
      if (it != v.end() && it->is_string()) {
        auto s = it->get<std::string>();
        // TRS version ids look like "tool:1.2"; keep the version part.
        if (std::string(key) == "id") {
          auto colon = s.rfind(':');
          if (colon != std::string::npos) s = s.substr(colon + 1);
        }
        return s;
      }
    }
  }
  return {};
}

}  // namespace

std::vector<RegistryTool> parse_trs_page(const std::string& body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) {
    throw Error(ErrorCode::kParse, "TRS listing page is not a JSON array");
  }
  std::vector<RegistryTool> out;
  for (const auto& t : doc) {
    RegistryTool tool;
    if (auto n = t.find("name"); n != t.end() && n->is_string()) tool.name = n->get<std::string>();
    if (tool.name.empty()) {
      if (auto id = t.find("id"); id != t.end() && id->is_string()) tool.name = id->get<std::string>();
    }
    if (tool.name.empty()) continue;
    tool.downloads = downloads_of(t);
    if (auto vs = t.find("versions"); vs != t.end() && vs->is_array()) {
      for (const auto& v : *vs) {
        auto name = version_name(v);
        if (!name.empty()) tool.versions.push_back(std::move(name));
      }
    }
    out.push_back(std::move(tool));
  }
  return out;
}

TrsRegistry::TrsRegistry(TrsOptions options) : options_(std::move(options)) {
  if (options_.base_url.empty()) throw Error(ErrorCode::kInvalidArgument, "TRS base_url is empty");
  if (options_.page_size < 1) throw Error(ErrorCode::kInvalidArgument, "page_size must be >= 1");
}

std::vector<RegistryTool> TrsRegistry::list_tools() {
  auto base = gateway::split_url(options_.base_url);
  std::vector<RegistryTool> all;
  std::set<std::string> cursors;
  std::string next = base.path_prefix + "/tools?limit=" + std::to_string(options_.page_size) +
                     "&offset=0";
  std::string origin = base.origin;
  while (true) {
    if (!cursors.insert(origin + next).second) {
      throw Error(ErrorCode::kLoopDetected, "TRS pagination revisited " + next);
    }
    auto outcome = detail::with_retries(
        [&] {
          httplib::Client client(origin);
          auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
          client.set_connection_timeout(secs.count(), 0);
          client.set_read_timeout(secs.count(), 0);
          return client.Get(next);
        },
        options_.retries, options_.backoff, [this] { ++requests_; }, "TRS listing " + next);
    auto page = parse_trs_page(outcome.body);
    const bool empty_page = page.empty();
    for (auto& t : page) all.push_back(std::move(t));

    auto it = outcome.headers.find("next_page");
    if (it == outcome.headers.end() || trim(it->second).empty() || empty_page) break;
    std::string link(trim(it->second));
    if (link.find("://") != std::string::npos) {
      auto parts = gateway::split_url(link);
      origin = parts.origin;
      next = parts.path_prefix.empty() ? "/" : parts.path_prefix;
    } else {
      next = link;
    }
  }
  return all;
}

std::vector<ToolRecord> rank_tools(std::vector<RegistryTool> tools, int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  std::sort(tools.begin(), tools.end(), [](const RegistryTool& a, const RegistryTool& b) {
    if (a.downloads != b.downloads) return a.downloads > b.downloads;
    return a.name < b.name;
  });
  const auto k = std::min<std::size_t>(tools.size(), static_cast<std::size_t>(n));
  std::vector<ToolRecord> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    ToolRecord r;
    r.name = tools[i].name;
    r.rank = static_cast<int>(i + 1);
    r.downloads = tools[i].downloads;
    r.versions = tools[i].versions;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ToolRecord> fetch_top_tools(ToolRegistry& registry, int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  return rank_tools(registry.list_tools(), n);
}

std::string FixtureHelpProvider::help_text(const std::string& tool, const std::string& version) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root_)) {
    throw Error(ErrorCode::kUnavailable, "help fixture root missing: " + root_);
  }
  fs::path p = fs::path(root_) / tool / (version + ".txt");
  if (!fs::exists(p)) throw Error(ErrorCode::kNotFound, "no captured help at " + p.string());
  return read_file(p.string());
}

ContainerHelpProvider::ContainerHelpProvider(std::string runtime, std::string image_prefix)
    : runtime_(std::move(runtime)), image_prefix_(std::move(image_prefix)) {}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  return out + "'";
}

std::optional<std::string> run_capture(const std::string& command) {
  std::FILE* pipe = ::popen((command + " 2>&1").c_str(), "r");
  if (!pipe) return std::nullopt;
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  int status = ::pclose(pipe);
  if (status == -1) return std::nullopt;
  return out;
}

}  // namespace

bool ContainerHelpProvider::runtime_available() const {
  auto out = run_capture(shell_quote(runtime_) + " --version");
  return out && out->find("ersion") != std::string::npos;
}

std::string ContainerHelpProvider::help_text(const std::string& tool, const std::string& version) {
  if (!runtime_available()) {
    throw Error(ErrorCode::kUnavailable, "container runtime '" + runtime_ + "' not available");
  }
  const std::string image = image_prefix_ + tool + ":" + version;
  for (const char* flag : {"--help", "-h", ""}) {
    std::string cmd = shell_quote(runtime_) + " run --rm " + shell_quote(image) + " " +
                      shell_quote(tool);
    if (*flag) cmd += std::string(" ") + flag;
    auto out = run_capture(cmd);
    if (out && !is_blank(*out)) return *out;
  }
  return {};
}

HelpCollection collect_help_docs(const ToolRecord& tool, HelpProvider& provider) {
  HelpCollection out;
  for (const auto& version : tool.versions) {
    std::string text;
    try {
      text = provider.help_text(tool.name, version);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kUnavailable) {
        spdlog::warn("help docs for {}: provider unavailable, skipping tool: {}", tool.name,
                     e.what());
        out.docs.clear();
        out.provider_unavailable = true;
        return out;
      }
      spdlog::warn("help docs for {} {}: {}", tool.name, version, e.what());
      out.failed_versions.push_back(version);
      continue;
    }
    if (is_blank(text)) {
      ++out.empty_versions;
      continue;
    }
    out.docs.push_back(HelpDoc{tool.name, version, std::move(text), provider.source_tag()});
  }
  return out;
}

json to_json(const ToolRecord& tool) {
  json docs = json::array();
  for (const auto& d : tool.help_docs) {
    docs.push_back({{"tool_name", d.tool_name}, {"version", d.version}, {"text", d.text},
                    {"source", d.source}});
  }
  return {{"name", tool.name},         {"rank", tool.rank},  {"downloads", tool.downloads},
          {"versions", tool.versions}, {"help_docs", docs}};
}

ToolRecord tool_from_json(const json& j) {
  ToolRecord t;
  t.name = j.at("name").get<std::string>();
  t.rank = j.value("rank", 0);
  t.downloads = j.value("downloads", 0LL);
  t.versions = j.value("versions", std::vector<std::string>{});
  if (auto docs = j.find("help_docs"); docs != j.end()) {
    for (const auto& d : *docs) {
      t.help_docs.push_back(HelpDoc{d.value("tool_name", t.name), d.at("version").get<std::string>(),
                                    d.at("text").get<std::string>(), d.value("source", "fixture")});
    }
  }
  return t;
}

std::string serialize_tools(const std::vector<ToolRecord>& tools) {
  json arr = json::array();
  for (const auto& t : tools) arr.push_back(to_json(t));
  return arr.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

std::vector<ToolRecord> parse_tools(std::string_view text) {
  try {
    json arr = json::parse(text);
    std::vector<ToolRecord> out;
    for (const auto& j : arr) out.push_back(tool_from_json(j));
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed tools file: ") + e.what());
  }
}

}  // namespace bioagents::ingest
