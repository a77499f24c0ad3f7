#include "bioagents/app/config.h"

#include <cstdlib>
#include <filesystem>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "bioagents/error.h"
#include "bioagents/text.h"

namespace bioagents::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kApiKeyEnv = "BIOAGENTS_API_KEY";
const char* const kAgentRoles[] = {"tool", "workflow", "reasoning"};

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path.lexically_normal().string();
  return (fs::path(base_dir) / path).lexically_normal().string();
}

void require_exists(const std::string& path, const char* what) {
  if (!path.empty() && !fs::exists(path)) {
    throw Error(ErrorCode::kNotFound, std::string(what) + " does not exist: " + path);
  }
}

}  // namespace

gateway::BackendSpec backend_spec_from_json(const json& j) {
  gateway::BackendSpec spec;
  const auto kind = j.value("kind", j.contains("base_url") ? "remote" : "scripted");
  if (kind == "remote") {
    spec.kind = gateway::BackendKind::kRemote;
  } else if (kind == "scripted" || kind == "scripted-mock") {
    spec.kind = gateway::BackendKind::kScriptedMock;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown backend kind '" + kind + "'");
  }
  spec.base_url = j.value("base_url", "");
  spec.model = j.value("model", "");
  spec.timeout = std::chrono::milliseconds(j.value("timeout_ms", 60000));
  spec.retries = j.value("retries", 2);
  spec.script.queue = j.value("replies", std::vector<std::string>{});
  spec.script.table = j.value("table", std::map<std::string, std::string>{});
  if (auto rules = j.find("rules"); rules != j.end()) {
    for (const auto& r : *rules) {
      spec.script.rules.push_back({r.at("contains").get<std::string>(), r.at("reply").get<std::string>()});
    }
  }
  if (auto fb = j.find("fallback"); fb != j.end()) spec.script.fallback = fb->get<std::string>();
  gateway::validate_spec(spec);
  return spec;
}

AppConfig default_config() {
  AppConfig c;
  c.prompts_path = BIOAGENTS_PROMPT_DIR;
  return c;
}

void validate_roles(const AppConfig& config) {
  for (const char* role : kAgentRoles) {
    if (!config.backends.count(role)) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("no backend configured for role '") + role + "'");
    }
  }
}

AppConfig parse_config(const json& j, const std::string& base_dir, bool require_index) {
  AppConfig c = default_config();
  try {
    if (auto backends = j.find("backends"); backends != j.end()) {
      for (const auto& [name, spec] : backends->items()) {
        if (name == "embedding") {
          c.embedding.kind = spec.value("kind", spec.contains("base_url") ? "remote" : "hash");
          c.embedding.dim = spec.value("dim", c.embedding.dim);
          c.embedding.base_url = spec.value("base_url", "");
          c.embedding.model = spec.value("model", c.embedding.model);
          c.embedding.max_batch = spec.value("max_batch", c.embedding.max_batch);
          c.embedding.retries = spec.value("retries", c.embedding.retries);
          c.embedding.timeout_ms = spec.value("timeout_ms", c.embedding.timeout_ms);
          continue;
        }
        try {
          c.backends[name] = backend_spec_from_json(spec);
        } catch (const Error& e) {
          throw Error(e.code(), "backends." + name + ": " + e.what());
        }
      }
    }
    if (auto p = j.find("pipeline"); p != j.end()) {
      c.pipeline.threshold = p->value("threshold", c.pipeline.threshold);
      c.pipeline.max_rounds = p->value("max_rounds", c.pipeline.max_rounds);
      c.pipeline.retrieval_k = p->value("retrieval_k", c.pipeline.retrieval_k);
      c.pipeline.return_last = p->value("return_last", c.pipeline.return_last);
      c.pipeline.forward_citations = p->value("forward_citations", c.pipeline.forward_citations);
      c.pipeline.concurrent_specialists =
          p->value("concurrent_specialists", c.pipeline.concurrent_specialists);
    }
    if (auto g = j.find("gen"); g != j.end()) {
      c.pipeline.gen.temperature = g->value("temperature", c.pipeline.gen.temperature);
      c.pipeline.gen.max_new_tokens = g->value("max_new_tokens", c.pipeline.gen.max_new_tokens);
      c.pipeline.gen.stop = g->value("stop", c.pipeline.gen.stop);
    }
    if (auto paths = j.find("paths"); paths != j.end()) {
      c.index_path = resolve(base_dir, paths->value("index", ""));
      c.traces_path = resolve(base_dir, paths->value("traces", c.traces_path));
      c.prompts_path = resolve(base_dir, paths->value("prompts", std::string{}));
      if (c.prompts_path.empty()) c.prompts_path = BIOAGENTS_PROMPT_DIR;
      if (auto corpora = paths->find("corpora"); corpora != paths->end()) {
        if (corpora->is_string()) {
          c.corpora.push_back(resolve(base_dir, corpora->get<std::string>()));
        } else {
          for (const auto& p : *corpora) c.corpora.push_back(resolve(base_dir, p.get<std::string>()));
        }
      }
    }
    if (auto s = j.find("service"); s != j.end()) {
      auto bind = s->value("bind", std::string{});
      if (!bind.empty()) {
        auto colon = bind.rfind(':');
        if (colon == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "service.bind needs host:port");
        c.bind_host = bind.substr(0, colon);
        c.bind_port = std::stoi(bind.substr(colon + 1));
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("config: ") + e.what());
  }
  if (const char* key = std::getenv(kApiKeyEnv)) c.api_key = key;

  orchestrator::validate(c.pipeline);
  if (require_index) require_exists(c.index_path, "paths.index");
  require_exists(c.prompts_path, "paths.prompts");
  for (const auto& corpus : c.corpora) require_exists(corpus, "paths.corpora entry");
  return c;
}

AppConfig load_config(const std::string& path, bool require_index) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kParse, "config is not valid JSON: " + path);
  return parse_config(j, fs::path(path).parent_path().string(), require_index);
}

std::unique_ptr<index::EmbeddingBackend> make_embedder(const EmbeddingSpec& spec,
                                                       const std::string& api_key) {
  if (spec.kind == "hash") return std::make_unique<index::HashEmbeddingBackend>(spec.dim, spec.max_batch);
  if (spec.kind == "remote") {
    index::RemoteEmbeddingOptions opts;
    opts.base_url = spec.base_url;
    opts.model = spec.model;
    opts.api_key = api_key;
    opts.max_batch = spec.max_batch;
    opts.retries = spec.retries;
    opts.timeout = std::chrono::milliseconds(spec.timeout_ms);
    return std::make_unique<index::RemoteEmbeddingBackend>(std::move(opts));
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown embedding kind '" + spec.kind + "'");
}

Runtime::Runtime(const AppConfig& config) : config_(config) {
  for (const auto& [name, spec] : config_.backends) {
    backends_[name] = gateway::make_backend(spec, config_.api_key);
  }
  embedder_ = make_embedder(config_.embedding, config_.api_key);
  prompts_ = orchestrator::load_prompts(config_.prompts_path);
  config_.pipeline.prompt_set = prompts_.name;
  if (!config_.index_path.empty()) {
    index_ = std::make_unique<index::VectorIndex>(index::load_index(config_.index_path));
    if (config_.embedding.kind == "hash" && index_->dim() != config_.embedding.dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "index dim " + std::to_string(index_->dim()) + " does not match embedding dim " +
                      std::to_string(config_.embedding.dim));
    }
  }
}

orchestrator::PipelineDeps Runtime::deps() const {
  orchestrator::PipelineDeps d;
  d.tool = backend("tool");
  d.workflow = backend("workflow");
  d.reasoning = backend("reasoning");
  d.index = index_.get();
  d.embedder = embedder_.get();
  d.prompts = &prompts_;
  return d;
}

gateway::ChatBackend* Runtime::backend(const std::string& name) const {
  auto it = backends_.find(name);
  return it == backends_.end() ? nullptr : it->second.get();
}

}  // namespace bioagents::app
