#include "bioagents/orchestrator.h"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <future>

#include <spdlog/spdlog.h>

#include "bioagents/text.h"

namespace bioagents::orchestrator {

using gateway::ChatMessage;
using gateway::Role;

const char* to_string(AgentRole role) {
  switch (role) {
    case AgentRole::kToolAgent: return "tool_agent";
    case AgentRole::kWorkflowAgent: return "workflow_agent";
    case AgentRole::kReasoningAgent: return "reasoning_agent";
  }
  return "tool_agent";
}

AgentRole agent_role_from_string(const std::string& s) {
  if (s == "tool_agent") return AgentRole::kToolAgent;
  if (s == "workflow_agent") return AgentRole::kWorkflowAgent;
  if (s == "reasoning_agent") return AgentRole::kReasoningAgent;
  throw Error(ErrorCode::kInvalidArgument, "unknown agent role '" + s + "'");
}

void validate(const PipelineConfig& config) {
  if (config.threshold < kMinRating || config.threshold > kMaxRating) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must be within 1..5");
  }
  if (config.max_rounds < 1 || config.max_rounds > kMaxRoundsLimit) {
    throw Error(ErrorCode::kInvalidArgument, "max_rounds must be within 1..10");
  }
  if (config.retrieval_k < 1) throw Error(ErrorCode::kInvalidArgument, "retrieval_k must be >= 1");
  gateway::validate_config(config.gen);
}

namespace {

const PromptSet& prompts_of(const PipelineDeps& deps) {
  return deps.prompts ? *deps.prompts : default_prompts();
}

gateway::ChatBackend& require(gateway::ChatBackend* backend, AgentRole role) {
  if (!backend) {
    throw AgentError(role, ErrorCode::kInvalidArgument, "no backend configured");
  }
  return *backend;
}

void require_query(const std::string& query) {
  if (is_blank(query)) throw Error(ErrorCode::kInvalidArgument, "query must not be empty");
}

std::string call(gateway::ChatBackend& backend, AgentRole role,
                 const std::vector<ChatMessage>& messages, const gateway::GenConfig& gen) {
  try {
    return backend.complete(messages, gen);
  } catch (const AgentError&) {
    throw;
  } catch (const Error& e) {
    throw AgentError(role, e.code(), e.what());
  }
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

void add_salt(std::vector<ChatMessage>& messages, int round) {
  if (round > 1) messages.back().content += "\n\n" + round_salt(round);
}

}  // namespace

std::string round_salt(int round) {
  return "Attempt " + std::to_string(round) + ": reconsider the question from scratch.";
}

std::string format_context(const std::vector<index::SearchHit>& hits) {
  if (hits.empty()) return "(no documentation excerpts available)";
  std::string out;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (i) out += "\n\n";
    out += "[" + std::to_string(i + 1) + "] " + hits[i].chunk_id + "\n" + hits[i].chunk.text;
  }
  return out;
}

AgentResponse ask_tool_agent(const std::string& query, const PipelineDeps& deps,
                             const PipelineConfig& config, int round) {
  require_query(query);
  auto& backend = require(deps.tool, AgentRole::kToolAgent);
  auto messages = render(prompts_of(deps).tool_agent,
                         {{"query", query}, {"round", std::to_string(round)}});
  add_salt(messages, round);
  const auto start = std::chrono::steady_clock::now();
  AgentResponse r;
  r.role = AgentRole::kToolAgent;
  r.text = call(backend, r.role, messages, config.gen);
  r.latency_ms = elapsed_ms(start);
  r.round = round;
  return r;
}

AgentResponse ask_workflow_agent(const std::string& query, const PipelineDeps& deps,
                                 const PipelineConfig& config, int round,
                                 std::vector<std::string>* warnings) {
  require_query(query);
  auto& backend = require(deps.workflow, AgentRole::kWorkflowAgent);
  const auto start = std::chrono::steady_clock::now();
  AgentResponse r;
  r.role = AgentRole::kWorkflowAgent;
  r.round = round;
  if (deps.index && !deps.index->empty() && deps.embedder) {
    try {
      r.retrieved = deps.index->search(query, config.retrieval_k, *deps.embedder);
    } catch (const Error& e) {
      throw AgentError(r.role, e.code(), std::string("retrieval failed: ") + e.what());
    }
  } else {
    const char* why = !deps.index ? "no index configured"
                      : !deps.embedder ? "no embedding backend configured"
                                       : "index is empty";
    spdlog::warn("workflow agent: {}; answering without context", why);
    if (warnings) warnings->push_back(std::string("round ") + std::to_string(round) +
                                      ": workflow agent ran without retrieval (" + why + ")");
  }
  auto messages = render(prompts_of(deps).workflow_agent,
                         {{"query", query},
                          {"context", format_context(r.retrieved)},
                          {"round", std::to_string(round)}});
  add_salt(messages, round);
  r.text = call(backend, r.role, messages, config.gen);
  r.latency_ms = elapsed_ms(start);
  return r;
}

std::vector<ChatMessage> synthesis_prompt(const std::string& query,
                                          const std::vector<AgentResponse>& responses,
                                          const PipelineDeps& deps,
                                          const PipelineConfig& config) {
  require_query(query);
  const AgentResponse* tool = nullptr;
  const AgentResponse* workflow = nullptr;
  for (const auto& r : responses) {
    if (r.role == AgentRole::kToolAgent && !tool) {
      tool = &r;
    } else if (r.role == AgentRole::kWorkflowAgent && !workflow) {
      workflow = &r;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "synthesis takes exactly one response per specialist");
    }
  }
  if (!tool || !workflow) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("synthesis is missing the ") + (tool ? "workflow" : "tool") +
                    " agent response");
  }
  std::string workflow_text = workflow->text;
  if (config.forward_citations && !workflow->retrieved.empty()) {
    workflow_text += "\n\nRetrieved documents:";
    for (std::size_t i = 0; i < workflow->retrieved.size(); ++i) {
      workflow_text += "\n[" + std::to_string(i + 1) + "] " + workflow->retrieved[i].chunk_id;
    }
  }
  return render(prompts_of(deps).reasoning_agent, {{"query", query},
                                                   {"tool_answer", tool->text},
                                                   {"workflow_answer", workflow_text},
                                                   {"round", std::to_string(tool->round)}});
}

std::string synthesize(const std::string& query, const std::vector<AgentResponse>& responses,
                       const PipelineDeps& deps, const PipelineConfig& config) {
  auto messages = synthesis_prompt(query, responses, deps, config);
  auto& backend = require(deps.reasoning, AgentRole::kReasoningAgent);
  return call(backend, AgentRole::kReasoningAgent, messages, config.gen);
}

std::optional<long> first_integer(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && !std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  if (i == text.size()) return std::nullopt;
  long value = 0;
  for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
    if (value > 1'000'000) return value;
    value = value * 10 + (text[i] - '0');
  }
  return value;
}

int self_rate(const std::string& query, const std::string& answer, const PipelineDeps& deps,
              const PipelineConfig& config) {
  if (is_blank(answer)) throw Error(ErrorCode::kInvalidArgument, "cannot rate an empty answer");
  auto& backend = require(deps.reasoning, AgentRole::kReasoningAgent);
  auto messages = render(prompts_of(deps).self_rate, {{"query", query}, {"answer", answer}});
  auto reply = call(backend, AgentRole::kReasoningAgent, messages, config.gen);
  auto value = first_integer(reply);
  if (!value) {
    messages.push_back({Role::kAssistant, reply.empty() ? std::string("(no reply)") : reply});
    messages.push_back({Role::kUser, "Reply with only a single integer from 1 to 5."});
    reply = call(backend, AgentRole::kReasoningAgent, messages, config.gen);
    value = first_integer(reply);
    if (!value) {
      throw AgentError(AgentRole::kReasoningAgent, ErrorCode::kUnparsableRating,
                       "no integer rating in reply: '" + reply.substr(0, 80) + "'");
    }
  }
  if (*value < kMinRating || *value > kMaxRating) {
    throw AgentError(AgentRole::kReasoningAgent, ErrorCode::kOutOfRange,
                     "rating " + std::to_string(*value) + " outside 1..5");
  }
  return static_cast<int>(*value);
}

int select_final_round(const std::vector<RoundRecord>& rounds, bool return_last) {
  if (rounds.empty()) throw Error(ErrorCode::kInvalidArgument, "no rounds to select from");
  if (return_last) return rounds.back().round;
  const RoundRecord* best = &rounds.front();
  for (const auto& r : rounds) {
    if (r.self_rating > best->self_rating) best = &r;
  }
  return best->round;
}

OrchestrationTrace run_pipeline(const std::string& query, const PipelineConfig& config,
                                const PipelineDeps& deps) {
  require_query(query);
  validate(config);
  OrchestrationTrace trace;
  trace.query = query;
  trace.config_snapshot = config;
  if (trace.config_snapshot.prompt_set.empty()) {
    trace.config_snapshot.prompt_set = prompts_of(deps).name;
  }

  try {
    for (int round = 1; round <= config.max_rounds; ++round) {
      RoundRecord record;
      record.round = round;
      std::vector<std::string> warnings;
      if (config.concurrent_specialists) {
        auto tool = std::async(std::launch::async,
                               [&] { return ask_tool_agent(query, deps, config, round); });
        AgentResponse workflow;
        try {
          workflow = ask_workflow_agent(query, deps, config, round, &warnings);
        } catch (...) {
          tool.wait();
          throw;
        }
        record.specialist_responses.push_back(tool.get());
        record.specialist_responses.push_back(std::move(workflow));
      } else {
        record.specialist_responses.push_back(ask_tool_agent(query, deps, config, round));
        record.specialist_responses.push_back(
            ask_workflow_agent(query, deps, config, round, &warnings));
      }
      for (auto& w : warnings) trace.warnings.push_back(std::move(w));
      record.synthesized = synthesize(query, record.specialist_responses, deps, config);
      record.self_rating = self_rate(query, record.synthesized, deps, config);
      const bool passed = record.self_rating >= config.threshold;
      trace.rounds.push_back(std::move(record));
      if (passed) break;
    }
  } catch (const Error& e) {
    if (!trace.rounds.empty()) {
      trace.final_round = select_final_round(trace.rounds, config.return_last);
      trace.final_answer = trace.rounds[trace.final_round - 1].synthesized;
    }
    throw PipelineError(e.code(), e.what(), std::move(trace));
  }
  trace.final_round = select_final_round(trace.rounds, config.return_last);
  trace.final_answer = trace.rounds[trace.final_round - 1].synthesized;
  return trace;
}

}  // namespace bioagents::orchestrator
