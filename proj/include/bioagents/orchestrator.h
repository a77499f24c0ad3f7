#pragma once

// The multi-agent answer pipeline. Per round, a tool specialist and a
// retrieval-backed workflow specialist answer the original query
// independently; a reasoning agent synthesizes their outputs and then rates the
// synthesis. Rounds repeat until the rating reaches the threshold or the round
// cap is hit, and the best-rated round's answer is returned.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "bioagents/embedding.h"
#include "bioagents/error.h"
#include "bioagents/gateway.h"
#include "bioagents/index.h"
#include "bioagents/prompts.h"

namespace bioagents::orchestrator {

enum class AgentRole { kToolAgent, kWorkflowAgent, kReasoningAgent };

const char* to_string(AgentRole role);
AgentRole agent_role_from_string(const std::string& s);

struct AgentResponse {
  AgentRole role = AgentRole::kToolAgent;
  std::string text;
  std::vector<index::SearchHit> retrieved;
  double latency_ms = 0.0;
  int round = 1;

  bool operator==(const AgentResponse&) const = default;
};

struct RoundRecord {
  int round = 1;
  std::vector<AgentResponse> specialist_responses;
  std::string synthesized;
  int self_rating = 1;

  bool operator==(const RoundRecord&) const = default;
};

inline constexpr int kMinRating = 1;
inline constexpr int kMaxRating = 5;
inline constexpr int kMaxRoundsLimit = 10;

struct PipelineConfig {
  int threshold = 4;
  int max_rounds = 3;
  std::size_t retrieval_k = 1;
  bool return_last = false;
  // Append retrieved chunk labels to the workflow section of the reasoning
  // prompt.
  bool forward_citations = false;
  bool concurrent_specialists = true;
  std::string prompt_set;
  gateway::GenConfig gen;

  bool operator==(const PipelineConfig&) const = default;
};

void validate(const PipelineConfig& config);

inline constexpr int kTraceSchemaVersion = 1;

struct OrchestrationTrace {
  std::string trace_id;
  std::string query;
  std::vector<RoundRecord> rounds;
  std::string final_answer;
  int final_round = 0;
  PipelineConfig config_snapshot;
  std::vector<std::string> warnings;

  bool operator==(const OrchestrationTrace&) const = default;
};

// Raised by a specialist or the reasoning agent; carries the role.
class AgentError : public Error {
 public:
  AgentError(AgentRole role, ErrorCode code, const std::string& message)
      : Error(code, std::string(to_string(role)) + ": " + message), role_(role) {}
  AgentRole role() const { return role_; }

 private:
  AgentRole role_;
};

// Raised by run_pipeline; the partial trace covers every completed round.
class PipelineError : public Error {
 public:
  PipelineError(ErrorCode code, const std::string& message, OrchestrationTrace partial)
      : Error(code, message), partial_(std::move(partial)) {}
  const OrchestrationTrace& partial_trace() const { return partial_; }

 private:
  OrchestrationTrace partial_;
};

struct PipelineDeps {
  gateway::ChatBackend* tool = nullptr;
  gateway::ChatBackend* workflow = nullptr;
  gateway::ChatBackend* reasoning = nullptr;
  const index::VectorIndex* index = nullptr;
  index::EmbeddingBackend* embedder = nullptr;
  const PromptSet* prompts = nullptr;
};

// Extra line added to specialist prompts from round 2 onwards.
std::string round_salt(int round);

std::string format_context(const std::vector<index::SearchHit>& hits);

AgentResponse ask_tool_agent(const std::string& query, const PipelineDeps& deps,
                             const PipelineConfig& config, int round = 1);

// `warnings` receives a note when retrieval is unavailable.
AgentResponse ask_workflow_agent(const std::string& query, const PipelineDeps& deps,
                                 const PipelineConfig& config, int round = 1,
                                 std::vector<std::string>* warnings = nullptr);

std::vector<gateway::ChatMessage> synthesis_prompt(const std::string& query,
                                                   const std::vector<AgentResponse>& responses,
                                                   const PipelineDeps& deps,
                                                   const PipelineConfig& config);

std::string synthesize(const std::string& query, const std::vector<AgentResponse>& responses,
                       const PipelineDeps& deps, const PipelineConfig& config);

// First run of ASCII digits in the reply, if any.
std::optional<long> first_integer(std::string_view text);

int self_rate(const std::string& query, const std::string& answer, const PipelineDeps& deps,
              const PipelineConfig& config);

OrchestrationTrace run_pipeline(const std::string& query, const PipelineConfig& config,
                                const PipelineDeps& deps);

// Earliest round with the maximum rating (or the last round when
// return_last is set). Requires a non-empty trace.
int select_final_round(const std::vector<RoundRecord>& rounds, bool return_last);

nlohmann::json to_json(const PipelineConfig& config);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OrchestrationTrace& trace);
OrchestrationTrace trace_from_json(const nlohmann::json& j);
// Canonical JSON: sorted keys, two-space indent, trailing LF.
std::string serialize_trace(const OrchestrationTrace& trace);
OrchestrationTrace parse_trace(const std::string& text);

}  // namespace bioagents::orchestrator
