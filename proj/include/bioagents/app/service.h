#pragma once

#include <memory>
#include <string>

#include "bioagents/app/config.h"
#include "bioagents/app/trace_store.h"

namespace httplib {
class Server;
}

namespace bioagents::app {

// HTTP surface:
//   POST /v1/ask {"query": ...} -> {"answer", "trace_id", "rounds":[{"round","rating"}]}
//   GET  /v1/trace/{id}         -> stored trace
//   GET  /healthz               -> {"status":"ok","version":...}
class AskService {
 public:
  AskService(const Runtime& runtime, TraceStore& store);
  ~AskService();

  AskService(const AskService&) = delete;
  AskService& operator=(const AskService&) = delete;

  // Returns the bound port.
  int bind(const std::string& host, int port);
  int bind_any(const std::string& host);
  // Blocks until stop().
  void listen();
  void stop();
  void wait_until_ready() const;

 private:
  void install_routes();

  const Runtime& runtime_;
  TraceStore& store_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace bioagents::app
