#include "bioagents/app/service.h"

#include <chrono>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "httplib.h"

namespace bioagents::app {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

void reply_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), kJson);
}

bool is_backend_failure(ErrorCode code) {
  return code == ErrorCode::kUnavailable || code == ErrorCode::kTimeout ||
         code == ErrorCode::kHttp;
}

}  // namespace

AskService::AskService(const Runtime& runtime, TraceStore& store)
    : runtime_(runtime), store_(store), server_(std::make_unique<httplib::Server>()) {
  validate_roles(runtime_.config());
  install_routes();
}

AskService::~AskService() { stop(); }

void AskService::install_routes() {
  server_->Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"status", "ok"}, {"version", BIOAGENTS_VERSION}}.dump(), kJson);
  });

  server_->Post("/v1/ask", [this](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("query") ||
        !body["query"].is_string() || body["query"].get<std::string>().empty()) {
      reply_error(res, 400, "expected a JSON object with a non-empty string field 'query'");
      return;
    }
    const auto query = body["query"].get<std::string>();
    try {
      auto trace = orchestrator::run_pipeline(query, runtime_.config().pipeline, runtime_.deps());
      const auto id = store_.store(trace);
      json rounds = json::array();
      for (const auto& r : trace.rounds) rounds.push_back({{"round", r.round}, {"rating", r.self_rating}});
      res.set_content(
          json{{"answer", trace.final_answer}, {"trace_id", id}, {"rounds", rounds}}.dump(), kJson);
    } catch (const orchestrator::PipelineError& e) {
      std::string id;
      try {
        id = store_.store(e.partial_trace());
      } catch (const Error& store_error) {
        spdlog::error("could not store partial trace: {}", store_error.what());
      }
      spdlog::warn("ask failed: {}", e.what());
      const int status = is_backend_failure(e.code()) ? 503 : 500;
      res.status = status;
      res.set_content(json{{"error", e.what()}, {"trace_id", id}}.dump(), kJson);
    } catch (const Error& e) {
      reply_error(res, e.code() == ErrorCode::kInvalidArgument ? 400 : 500, e.what());
    }
  });

  server_->Get(R"(/v1/trace/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      auto trace = store_.load(req.matches[1]);
      res.set_content(orchestrator::serialize_trace(trace), kJson);
    } catch (const Error& e) {
      reply_error(res, e.code() == ErrorCode::kNotFound ? 404 : 500, e.what());
    }
  });
}

int AskService::bind(const std::string& host, int port) {
  if (!server_->bind_to_port(host, port)) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

int AskService::bind_any(const std::string& host) {
  const int port = server_->bind_to_any_port(host);
  if (port < 0) throw Error(ErrorCode::kIo, "cannot bind " + host);
  return port;
}

void AskService::listen() { server_->listen_after_bind(); }

void AskService::stop() {
  if (server_) server_->stop();
}

void AskService::wait_until_ready() const {
  while (!server_->is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
}

}  // namespace bioagents::app
