#include "bioagents/gateway.h"

#include <nlohmann/json.hpp>

#include "bioagents/http_retry.h"

namespace bioagents::gateway {

using nlohmann::json;

const char* to_string(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

Role role_from_string(const std::string& s) {
  if (s == "system") return Role::kSystem;
  if (s == "user") return Role::kUser;
  if (s == "assistant") return Role::kAssistant;
  throw Error(ErrorCode::kInvalidArgument, "unknown role '" + s + "'");
}

void validate_messages(std::span<const ChatMessage> messages) {
  if (messages.empty()) throw Error(ErrorCode::kInvalidArgument, "empty conversation");
  if (messages.front().role == Role::kAssistant) {
    throw Error(ErrorCode::kInvalidArgument, "conversation must start with system or user");
  }
  for (const auto& m : messages) {
    if (m.content.empty()) throw Error(ErrorCode::kInvalidArgument, "empty message content");
  }
}

void validate_config(const GenConfig& config) {
  if (!(config.temperature >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  }
  if (config.max_new_tokens < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_new_tokens must be >= 1");
  }
}

std::string serialize_chat_request(std::span<const ChatMessage> messages,
                                   const GenConfig& config) {
  json body;
  body["model"] = config.model;
  body["temperature"] = config.temperature;
  body["max_tokens"] = config.max_new_tokens;
  json msgs = json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  body["messages"] = std::move(msgs);
  if (!config.stop.empty()) body["stop"] = config.stop;
  return body.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string parse_chat_response(const std::string& body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::kParse, "completion response is not JSON");
  try {
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    if (content.is_null()) return {};
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("unexpected completion shape: ") + e.what());
  }
}

UrlParts split_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "base_url needs a scheme: " + url);
  }
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, ""};
  std::string prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, slash), prefix};
}

RemoteChatBackend::RemoteChatBackend(RemoteOptions options) : options_(std::move(options)) {
  if (options_.base_url.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "remote backend requires base_url");
  }
  split_url(options_.base_url);
}

std::string RemoteChatBackend::complete(std::span<const ChatMessage> messages,
                                        const GenConfig& config) {
  validate_messages(messages);
  validate_config(config);
  GenConfig effective = config;
  if (effective.model.empty()) effective.model = options_.model;
  const std::string body = serialize_chat_request(messages, effective);
  const auto url = split_url(options_.base_url);
  const std::string path = url.path_prefix + "/v1/chat/completions";

  auto outcome = detail::with_retries(
      [&] {
        httplib::Client client(url.origin);
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
        auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        httplib::Headers headers;
        if (!options_.api_key.empty()) {
          headers.emplace("Authorization", "Bearer " + options_.api_key);
        }
        return client.Post(path, headers, body, "application/json");
      },
      options_.retries, options_.backoff, [this] { ++attempts_; },
      "chat completion at " + options_.base_url);
  return parse_chat_response(outcome.body);
}

ScriptedChatBackend::ScriptedChatBackend(Script script) : script_(std::move(script)) {
  if (script_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "scripted backend requires a script");
  }
}

std::string ScriptedChatBackend::complete(std::span<const ChatMessage> messages,
                                          const GenConfig& config) {
  validate_messages(messages);
  std::lock_guard lock(mu_);
  requests_.push_back({{messages.begin(), messages.end()}, config});
  const std::string& prompt = messages.back().content;
  if (auto it = script_.table.find(prompt); it != script_.table.end()) return it->second;
  for (const auto& rule : script_.rules) {
    if (prompt.find(rule.contains) != std::string::npos) return rule.reply;
  }
  if (next_ < script_.queue.size()) return script_.queue[next_++];
  if (script_.fallback) return *script_.fallback;
  throw Error(ErrorCode::kScriptExhausted,
              "scripted backend exhausted after " + std::to_string(requests_.size() - 1) +
                  " replies");
}

std::size_t ScriptedChatBackend::attempts() const {
  std::lock_guard lock(mu_);
  return requests_.size();
}

std::vector<CapturedRequest> ScriptedChatBackend::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::string FunctionChatBackend::complete(std::span<const ChatMessage> messages,
                                          const GenConfig& config) {
  validate_messages(messages);
  ++attempts_;
  return fn_(messages, config);
}

void validate_spec(const BackendSpec& spec) {
  if (spec.kind == BackendKind::kRemote && spec.base_url.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "remote backend requires base_url");
  }
  if (spec.kind == BackendKind::kScriptedMock && spec.script.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "scripted backend requires a script");
  }
  if (spec.retries < 0) throw Error(ErrorCode::kInvalidArgument, "retries must be >= 0");
}

std::unique_ptr<ChatBackend> make_backend(const BackendSpec& spec, const std::string& api_key) {
  validate_spec(spec);
  if (spec.kind == BackendKind::kScriptedMock) {
    return std::make_unique<ScriptedChatBackend>(spec.script);
  }
  RemoteOptions opts;
  opts.base_url = spec.base_url;
  opts.model = spec.model;
  opts.api_key = api_key;
  opts.timeout = spec.timeout;
  opts.retries = spec.retries;
  return std::make_unique<RemoteChatBackend>(std::move(opts));
}

}  // namespace bioagents::gateway
