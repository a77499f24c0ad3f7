#include <nlohmann/json.hpp>

#include "bioagents/orchestrator.h"

namespace bioagents::orchestrator {

using nlohmann::json;

namespace {

json hit_to_json(const index::SearchHit& h) {
  return {{"chunk_id", h.chunk_id},
          {"score", h.score},
          {"chunk",
           {{"chunk_id", h.chunk.chunk_id},
            {"source_id", h.chunk.source_id},
            {"text", h.chunk.text},
            {"meta", h.chunk.meta},
            {"offset", h.chunk.offset}}}};
}

index::SearchHit hit_from_json(const json& j) {
  index::SearchHit h;
  h.chunk_id = j.at("chunk_id").get<std::string>();
  h.score = j.at("score").get<double>();
  const auto& c = j.at("chunk");
  h.chunk.chunk_id = c.at("chunk_id").get<std::string>();
  h.chunk.source_id = c.at("source_id").get<std::string>();
  h.chunk.text = c.at("text").get<std::string>();
  h.chunk.meta = c.value("meta", std::map<std::string, std::string>{});
  h.chunk.offset = c.value("offset", std::size_t{0});
  return h;
}

}  // namespace

json to_json(const PipelineConfig& config) {
  return {{"threshold", config.threshold},
          {"max_rounds", config.max_rounds},
          {"retrieval_k", config.retrieval_k},
          {"return_last", config.return_last},
          {"forward_citations", config.forward_citations},
          {"concurrent_specialists", config.concurrent_specialists},
          {"prompt_set", config.prompt_set},
          {"gen",
           {{"temperature", config.gen.temperature},
            {"max_new_tokens", config.gen.max_new_tokens},
            {"model", config.gen.model},
            {"stop", config.gen.stop}}}};
}

PipelineConfig pipeline_config_from_json(const json& j) {
  PipelineConfig c;
  c.threshold = j.value("threshold", c.threshold);
  c.max_rounds = j.value("max_rounds", c.max_rounds);
  c.retrieval_k = j.value("retrieval_k", c.retrieval_k);
  c.return_last = j.value("return_last", c.return_last);
  c.forward_citations = j.value("forward_citations", c.forward_citations);
  c.concurrent_specialists = j.value("concurrent_specialists", c.concurrent_specialists);
  c.prompt_set = j.value("prompt_set", c.prompt_set);
  if (auto g = j.find("gen"); g != j.end()) {
    c.gen.temperature = g->value("temperature", c.gen.temperature);
    c.gen.max_new_tokens = g->value("max_new_tokens", c.gen.max_new_tokens);
    c.gen.model = g->value("model", c.gen.model);
    c.gen.stop = g->value("stop", c.gen.stop);
  }
  return c;
}

json to_json(const OrchestrationTrace& trace) {
  json rounds = json::array();
  for (const auto& r : trace.rounds) {
    json responses = json::array();
    for (const auto& s : r.specialist_responses) {
      json hits = json::array();
      for (const auto& h : s.retrieved) hits.push_back(hit_to_json(h));
      responses.push_back({{"role", to_string(s.role)},
                           {"text", s.text},
                           {"retrieved", hits},
                           {"latency_ms", s.latency_ms},
                           {"round", s.round}});
    }
    rounds.push_back({{"round", r.round},
                      {"specialist_responses", responses},
                      {"synthesized", r.synthesized},
                      {"self_rating", r.self_rating}});
  }
  return {{"schema_version", kTraceSchemaVersion},
          {"trace_id", trace.trace_id},
          {"query", trace.query},
          {"rounds", rounds},
          {"final_answer", trace.final_answer},
          {"final_round", trace.final_round},
          {"config", to_json(trace.config_snapshot)},
          {"warnings", trace.warnings}};
}

OrchestrationTrace trace_from_json(const json& j) {
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kTraceSchemaVersion) {
      throw Error(ErrorCode::kVersionMismatch,
                  "unsupported trace schema version " + std::to_string(version));
    }
    OrchestrationTrace t;
    t.trace_id = j.value("trace_id", "");
    t.query = j.at("query").get<std::string>();
    for (const auto& r : j.at("rounds")) {
      RoundRecord rec;
      rec.round = r.at("round").get<int>();
      rec.synthesized = r.at("synthesized").get<std::string>();
      rec.self_rating = r.at("self_rating").get<int>();
      for (const auto& s : r.at("specialist_responses")) {
        AgentResponse resp;
        resp.role = agent_role_from_string(s.at("role").get<std::string>());
        resp.text = s.at("text").get<std::string>();
        resp.latency_ms = s.value("latency_ms", 0.0);
        resp.round = s.value("round", rec.round);
        for (const auto& h : s.value("retrieved", json::array())) {
          resp.retrieved.push_back(hit_from_json(h));
        }
        rec.specialist_responses.push_back(std::move(resp));
      }
      t.rounds.push_back(std::move(rec));
    }
    t.final_answer = j.at("final_answer").get<std::string>();
    t.final_round = j.at("final_round").get<int>();
    t.config_snapshot = pipeline_config_from_json(j.at("config"));
    t.warnings = j.value("warnings", std::vector<std::string>{});
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed trace: ") + e.what());
  }
}

std::string serialize_trace(const OrchestrationTrace& trace) {
  return to_json(trace).dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

OrchestrationTrace parse_trace(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kParse, "trace is not JSON");
  return trace_from_json(j);
}

}  // namespace bioagents::orchestrator
