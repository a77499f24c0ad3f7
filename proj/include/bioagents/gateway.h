#pragma once

// Chat-completion backends. Every agent talks to its model through the
// ChatBackend interface; remote endpoints speak the OpenAI-compatible
// `/v1/chat/completions` protocol and the scripted mock replays canned replies.

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bioagents/error.h"
#include "bioagents/text.h"

namespace bioagents::gateway {

enum class Role { kSystem, kUser, kAssistant };

const char* to_string(Role role);
Role role_from_string(const std::string& s);

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct GenConfig {
  double temperature = 0.1;
  int max_new_tokens = 1000;
  std::string model;
  std::vector<std::string> stop;

  bool operator==(const GenConfig&) const = default;
};

// Throws Error(kInvalidArgument) on an empty conversation, empty content, or
// a first message that is neither system nor user.
void validate_messages(std::span<const ChatMessage> messages);
void validate_config(const GenConfig& config);

// Canonical request body (sorted keys, no whitespace).
std::string serialize_chat_request(std::span<const ChatMessage> messages,
                                   const GenConfig& config);

// Extracts choices[0].message.content; throws Error(kParse) otherwise.
std::string parse_chat_response(const std::string& body);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  virtual std::string complete(std::span<const ChatMessage> messages,
                               const GenConfig& config) = 0;

  // Number of transport attempts made so far, including retries.
  virtual std::size_t attempts() const = 0;
};

struct RemoteOptions {
  std::string base_url;
  std::string model;
  std::string api_key;
  std::chrono::milliseconds timeout{60000};
  int retries = 2;
  std::chrono::milliseconds backoff{500};
};

// Retries on timeouts, connection failures, 429 and 5xx; at most
// 1 + retries attempts per call. Other non-2xx responses fail immediately with
// the response body in the message.
class RemoteChatBackend : public ChatBackend {
 public:
  explicit RemoteChatBackend(RemoteOptions options);

  std::string complete(std::span<const ChatMessage> messages,
                       const GenConfig& config) override;
  std::size_t attempts() const override { return attempts_.load(); }

  const RemoteOptions& options() const { return options_; }

 private:
  RemoteOptions options_;
  std::atomic<std::size_t> attempts_{0};
};

struct ScriptRule {
  std::string contains;
  std::string reply;
};

struct Script {
  // Keyed on the content of the last message.
  std::map<std::string, std::string> table;
  // First rule whose `contains` occurs in the last message wins.
  std::vector<ScriptRule> rules;
  std::vector<std::string> queue;
  // Returned once the queue is exhausted, if set.
  std::optional<std::string> fallback;

  bool empty() const {
    return table.empty() && rules.empty() && queue.empty() && !fallback;
  }
};

struct CapturedRequest {
  std::vector<ChatMessage> messages;
  GenConfig config;
};

// Deterministic mock: exact table lookup, then substring rules, then the next
// queued reply, then the fallback. Running out raises kScriptExhausted.
class ScriptedChatBackend : public ChatBackend {
 public:
  explicit ScriptedChatBackend(Script script);

  std::string complete(std::span<const ChatMessage> messages,
                       const GenConfig& config) override;
  std::size_t attempts() const override;

  std::vector<CapturedRequest> requests() const;

 private:
  mutable std::mutex mu_;
  Script script_;
  std::size_t next_ = 0;
  std::vector<CapturedRequest> requests_;
};

// Wraps a callable; handy for echo and adversarial mocks in tests.
class FunctionChatBackend : public ChatBackend {
 public:
  using Fn = std::function<std::string(std::span<const ChatMessage>, const GenConfig&)>;

  explicit FunctionChatBackend(Fn fn) : fn_(std::move(fn)) {}

  std::string complete(std::span<const ChatMessage> messages,
                       const GenConfig& config) override;
  std::size_t attempts() const override { return attempts_.load(); }

 private:
  Fn fn_;
  std::atomic<std::size_t> attempts_{0};
};

enum class BackendKind { kRemote, kScriptedMock };

struct BackendSpec {
  BackendKind kind = BackendKind::kScriptedMock;
  std::string base_url;
  std::string model;
  Script script;
  std::chrono::milliseconds timeout{60000};
  int retries = 2;
};

void validate_spec(const BackendSpec& spec);
std::unique_ptr<ChatBackend> make_backend(const BackendSpec& spec,
                                          const std::string& api_key = {});

using bioagents::approx_token_count;

// Parses "http://host:port/prefix" into (scheme://host:port, /prefix).
struct UrlParts {
  std::string origin;
  std::string path_prefix;
};
UrlParts split_url(const std::string& url);

}  // namespace bioagents::gateway
