#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "bioagents/embedding.h"
#include "bioagents/gateway.h"
#include "bioagents/index.h"
#include "bioagents/orchestrator.h"
#include "bioagents/prompts.h"

namespace bioagents::app {

struct EmbeddingSpec {
  std::string kind = "hash";  // "hash" or "remote"
  std::size_t dim = 64;
  std::string base_url;
  std::string model = "text-embedding-ada-002";
  std::size_t max_batch = 1000;
  int retries = 2;
  int timeout_ms = 60000;
};

struct AppConfig {
  // Keyed by role name: "tool", "workflow", "reasoning", plus optional extras
  // (e.g. "classifier") usable by `bench --backend`.
  std::map<std::string, gateway::BackendSpec> backends;
  EmbeddingSpec embedding;
  orchestrator::PipelineConfig pipeline;
  std::string index_path;
  std::string traces_path = "traces";
  std::vector<std::string> corpora;
  std::string prompts_path;
  std::string bind_host = "127.0.0.1";
  int bind_port = 8088;
  std::string api_key;
};

// Relative paths resolve against `base_dir`. Validation is eager: a missing
// index, corpus or prompt directory fails here with Error(kNotFound), and
// every agent role must resolve to a backend.
// `require_index` is false only for commands that create the index.
AppConfig parse_config(const nlohmann::json& j, const std::string& base_dir,
                       bool require_index = true);
AppConfig load_config(const std::string& path, bool require_index = true);

// Defaults for running without a config file: no chat backends, hash
// embeddings, traces under ./traces.
AppConfig default_config();

void validate_roles(const AppConfig& config);

gateway::BackendSpec backend_spec_from_json(const nlohmann::json& j);

std::unique_ptr<index::EmbeddingBackend> make_embedder(const EmbeddingSpec& spec,
                                                       const std::string& api_key);

// Owns everything a pipeline run needs.
class Runtime {
 public:
  explicit Runtime(const AppConfig& config);

  orchestrator::PipelineDeps deps() const;
  const AppConfig& config() const { return config_; }
  gateway::ChatBackend* backend(const std::string& name) const;
  index::EmbeddingBackend& embedder() const { return *embedder_; }
  const index::VectorIndex* vector_index() const { return index_.get(); }

 private:
  AppConfig config_;
  std::map<std::string, std::unique_ptr<gateway::ChatBackend>> backends_;
  std::unique_ptr<index::EmbeddingBackend> embedder_;
  std::unique_ptr<index::VectorIndex> index_;
  orchestrator::PromptSet prompts_;
};

}  // namespace bioagents::app
